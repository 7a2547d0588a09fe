"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy fallback.
``use_backend`` switches explicitly (tests and the benchmark use it).
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_active = _ckernels if _ckernels is not None else _pykernels


def available() -> list[str]:
    names = [_pykernels.NAME]
    if _ckernels is not None:
        names.insert(0, _ckernels.NAME)
    return names


def use_backend(name: str) -> str:
    """Select "compiled" or "python"; returns the previously active name."""
    global _active
    previous = _active.NAME
    if name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        _active = _ckernels
    elif name == "python":
        _active = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def active():
    return _active


def name() -> str:
    return _active.NAME
