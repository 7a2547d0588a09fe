import pytest

from vidnbc import _backend

ACCEPTANCE_LINES = []


@pytest.fixture(params=_backend.available())
def backend(request):
    previous = _backend.use_backend(request.param)
    yield request.param
    _backend.use_backend(previous)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
