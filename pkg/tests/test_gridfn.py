import math

import numpy as np
import pytest

from vidnbc.gridfn import (Grid, GridFunction, NonFiniteError, bielecki_distance,
                           bielecki_norm, eval_at)


def sampled(T, N, w, wp):
    return GridFunction.from_callables(Grid(T, N), w, wp)


def test_grid_nodes():
    g = Grid(2.0, 3)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == 2.0
    assert np.all(np.diff(g.nodes) > 0)


def test_last_node_is_exactly_T():
    g = Grid(0.7, 7)
    assert g.nodes[-1] == 0.7


@pytest.mark.parametrize("T, N", [(0.0, 4), (-1.0, 4), (1.0, 1), (1.0, 2.5)])
def test_grid_rejects_bad_input(T, N):
    with pytest.raises(ValueError):
        Grid(T, N)


def test_gridfunction_validates():
    g = Grid(1.0, 4)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(4), np.zeros(5))
    with pytest.raises(NonFiniteError):
        GridFunction(g, np.full(5, np.nan), np.zeros(5))


def test_eval_at_reproduces_cubic_exactly():
    f = sampled(1.0, 4, lambda t: t**2, lambda t: 2 * t)
    w, wp = eval_at(f, 0.3)
    assert w == pytest.approx(0.09, abs=1e-15)
    assert wp == pytest.approx(0.6, abs=1e-15)


def test_eval_at_node_returns_samples():
    f = sampled(1.0, 4, np.sin, np.cos)
    assert eval_at(f, f.t[2]) == (f.w[2], f.wp[2])
    assert eval_at(f, 1.0) == (f.w[-1], f.wp[-1])
    assert eval_at(f, 0.0) == (f.w[0], f.wp[0])


def test_eval_at_outside_interval():
    f = sampled(1.0, 4, np.sin, np.cos)
    with pytest.raises(ValueError):
        eval_at(f, 1.5)
    with pytest.raises(ValueError):
        eval_at(f, -0.1)


def test_eval_at_sine_accuracy():
    # compare with library sine on a 10x finer set of points
    f = sampled(1.0, 10, np.sin, np.cos)
    ts = np.linspace(0, 1, 101)
    err = max(abs(eval_at(f, t)[0] - math.sin(t)) for t in ts)
    # fourth-order bound h^4 max|sin''''| / 384 = 2.6e-7
    assert err <= 1e-5
    assert err <= 0.1**4 * math.sin(1.0) / 384 * 1.01


def test_eval_at_cubic_within_ulps():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.uniform(-2, 2, 4)
        f = sampled(1.0, 8, lambda t: np.polyval(a, t), lambda t: np.polyval(np.polyder(a), t))
        for t in rng.uniform(0, 1, 10):
            w, wp = eval_at(f, t)
            assert abs(w - np.polyval(a, t)) <= 10 * np.spacing(8.0)
            assert abs(wp - np.polyval(np.polyder(a), t)) <= 100 * np.spacing(8.0)


def test_norm_constant_one():
    f = sampled(1.0, 10, lambda t: np.ones_like(t), lambda t: np.zeros_like(t))
    assert bielecki_norm(f, 1.0) == 1.0


def test_norm_exponential_ratio_constant():
    f = sampled(1.0, 10, np.exp, np.exp)
    assert bielecki_norm(f, 1.0) == pytest.approx(2.0, rel=1e-15)


def test_norm_zero():
    f = sampled(1.0, 10, np.zeros_like, np.zeros_like)
    assert bielecki_norm(f, 0.5) == 0.0


def test_norm_rejects_nonpositive_gamma():
    f = sampled(1.0, 10, np.sin, np.cos)
    with pytest.raises(ValueError):
        bielecki_norm(f, 0.0)


def test_distance_identity_and_constant_shift():
    f = sampled(1.0, 10, np.sin, np.cos)
    g = sampled(1.0, 10, lambda t: np.sin(t) + 0.3, np.cos)
    assert bielecki_distance(f, f, 2.0) == 0.0
    assert bielecki_distance(f, g, 7.0) == pytest.approx(0.3, rel=1e-14)


def test_distance_grid_mismatch():
    with pytest.raises(ValueError, match="grid mismatch"):
        bielecki_distance(sampled(1.0, 10, np.sin, np.cos), sampled(1.0, 12, np.sin, np.cos), 1.0)


def random_gf(rng, grid):
    n1 = grid.N + 1
    return GridFunction(grid, rng.normal(size=n1) * rng.uniform(0.1, 10),
                        rng.normal(size=n1) * rng.uniform(0.1, 10))


def test_norm_axioms_on_random_grid_functions():
    rng = np.random.default_rng(2024)
    grid = Grid(1.5, 16)
    for _ in range(1000):
        gamma = rng.uniform(0.1, 5)
        f, g = random_gf(rng, grid), random_gf(rng, grid)
        nf, ng = bielecki_norm(f, gamma), bielecki_norm(g, gamma)
        assert nf > 0
        lam = rng.uniform(-5, 5)
        scaled = GridFunction(grid, lam * f.w, lam * f.wp)
        assert bielecki_norm(scaled, gamma) == pytest.approx(abs(lam) * nf, rel=1e-14)
        total = GridFunction(grid, f.w + g.w, f.wp + g.wp)
        assert bielecki_norm(total, gamma) <= nf + ng + 1e-12
        assert bielecki_distance(f, g, gamma) == bielecki_distance(g, f, gamma)
    zero = GridFunction(grid, np.zeros(17), np.zeros(17))
    assert bielecki_norm(zero, 1.0) == 0.0


def test_node_norm_close_to_dense_norm():
    # smooth sample: node maximum within O(h) of a 10x refined Hermite resampling
    for N in (10, 20, 40):
        f = sampled(2.0, N, lambda t: np.sin(3 * t), lambda t: 3 * np.cos(3 * t))
        gamma = 0.7
        dense_t = np.linspace(0, 2.0, 10 * N + 1)
        dense = max((abs(a) + abs(b)) * math.exp(-gamma * t)
                    for t in dense_t for a, b in [eval_at(f, t)])
        node = bielecki_norm(f, gamma)
        assert 0 <= dense - node <= 5.0 * f.grid.h
