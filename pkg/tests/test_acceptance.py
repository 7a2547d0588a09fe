"""Acceptance gate: one test per criterion, each printing a pass/fail line."""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import ex1_printed_residual_constant, ex2_F, ex2_G, rk4_volterra_ivp
from vidnbc import _backend
from vidnbc.analysis import compare, contraction_constant, residuals
from vidnbc.expr import parse
from vidnbc.gridfn import Grid, GridFunction, bielecki_distance, eval_at
from vidnbc.picard import SolveOptions, apply_operator, solve
from vidnbc.problem import MU_VARS, builtin_example
from vidnbc.quadrature import SampledIntegrand, trapz, weighted_tail

import test_expr
import test_gridfn


def record(number, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}")
    assert ok, detail


def ex2_exact(grid):
    return GridFunction.from_callables(grid, lambda t: (t + t * t) / 10, lambda t: (1 + 2 * t) / 10)


def test_criterion_01_q_first_example():
    q = contraction_constant(0.01, (1 + math.exp(0.1)) / 10, 1.0, math.exp(0.1), [1, 1, -1, 0, 1], 1.0).q
    record(1, abs(q - 0.901278) <= 5e-6, f"q = {q:.7f} (target 0.901278 +/- 5e-6)")


def test_criterion_02_q_second_example():
    r1 = contraction_constant(0.01, 1.0, 2.0, 5.0, [1, 1, 1, 1], 1.0)
    r2 = contraction_constant(0.01, 1.0, 2.0, 5.0, [1, 1, 1, 1], 2.0)
    ok = abs(r1.q - 0.72196) <= 5e-6 and r1.unique and abs(r2.q - 1.95) <= 0.01
    record(2, ok, f"q(gamma=1) = {r1.q:.6f} < 1; q(gamma=2) = {r2.q:.4f}, "
                  "so the printed 0.8395 at gamma=2 is not reproduced")


def test_criterion_03_solution_reproduction():
    p = builtin_example("ex2")
    errs = []
    start = time.perf_counter()
    for N in (400, 800):
        res = solve(p, SolveOptions(N=N, tol=1e-10, gamma=1.0))
        assert res.converged
        t = res.solution.t
        errs.append(float(np.max(np.abs(res.solution.w - (t + t * t) / 10))))
        if N == 400:
            elapsed = time.perf_counter() - start
    ratio = errs[0] / errs[1]
    ok = errs[0] <= 1e-3 and 3.5 <= ratio <= 4.5 and elapsed < 10
    record(3, ok, f"max error {errs[0]:.3e} at N=400, ratio {ratio:.3f} at N=800, "
                  f"{elapsed:.2f} s ({_backend.name()} backend)")


def test_criterion_04_fixed_point():
    f = ex2_exact(Grid(2.0, 400))
    d = bielecki_distance(apply_operator(builtin_example("ex2"), f), f, 1.0)
    record(4, d <= 1e-4, f"distance {d:.3e} <= 1e-4")


def test_criterion_05_first_example_audit():
    grid = Grid(1.0, 400)
    f = GridFunction.from_callables(grid, lambda t: np.exp(t / 10), lambda t: np.exp(t / 10) / 10)
    printed = residuals(builtin_example("ex1"), f).ode_residual
    corrected = residuals(builtin_example("ex1_corrected"), f).ode_residual_max
    spread = float(np.ptp(printed))
    mean = float(np.mean(printed))
    ok = (np.all(np.abs(np.abs(printed) - 8.985e-3) <= 2e-4)
          and abs(mean - ex1_printed_residual_constant()) <= 1e-6
          and corrected <= 1e-4)
    record(5, ok, f"printed residual {mean:.4e} (spread {spread:.1e}, |r| target 8.985e-3 +/- 2e-4); "
                  f"corrected max {corrected:.2e} <= 1e-4")


def test_criterion_06_rk4_oracle():
    res = solve(builtin_example("ex2"), SolveOptions(N=400, tol=1e-10))
    sol = res.solution
    t, w, wp = rk4_volterra_ivp(ex2_F, ex2_G, sol.w[0], sol.wp[0], 2.0, 400)
    err = float(max(np.max(np.abs(w - sol.w)), np.max(np.abs(wp - sol.wp))))
    record(6, err <= 1e-3, f"sup difference vs RK4 {err:.3e} <= 1e-3")


@pytest.mark.parametrize("id", ["ex1_corrected", "ex2"])
def test_criterion_07_convergence_rate(id):
    res = solve(builtin_example(id), SolveOptions(N=400, tol=1e-10, gamma=1.0))
    inc = res.increments
    ratios = [inc[n + 1] / inc[n] for n in range(1, len(inc) - 1)]
    worst = max(ratios)
    record(7, res.converged and worst <= res.q_used + 0.05,
           f"{id}: worst increment ratio {worst:.4f} <= q + 0.05 = {res.q_used + 0.05:.4f}")


def test_criterion_08_dependence_bound():
    p = builtin_example("ex2")
    mu = parse("0", MU_VARS)
    opts = SolveOptions(N=400, tol=1e-10, gamma=1.0)
    deltas = np.random.default_rng(20240).uniform(-0.1, 0.1, 20)
    start = time.perf_counter()
    reports = [compare(p, p.replace(w0=p.w0 + d), mu, opts) for d in deltas]
    elapsed = time.perf_counter() - start
    q = reports[0].q
    slopes = [r.measured / abs(d) for r, d in zip(reports, deltas)]
    ok = (abs(q - 0.72196) <= 5e-6
          and all(r.measured <= r.bound for r in reports)
          and all(abs(r.bound - 0.2 * abs(d) / (1 - q)) <= 1e-15 for r, d in zip(reports, deltas))
          and max(slopes) <= 0.71933 + 1e-3
          and elapsed < 120)
    record(8, ok, f"20 perturbations: measured <= bound in all; max measured/|delta| "
                  f"{max(slopes):.5f} <= 0.71933 + 1e-3, {elapsed:.1f} s")


def test_criterion_09_identical_problems():
    p = builtin_example("ex2")
    rep = compare(p, p, parse("0", MU_VARS), SolveOptions(N=400))
    record(9, rep.bound == 0.0 and rep.measured == 0.0,
           f"bound {rep.bound!r}, measured {rep.measured!r}")


def test_criterion_10_side_conditions():
    worst_b = worst_n = 0.0
    for id in ("ex1", "ex1_corrected", "ex2"):
        p = builtin_example(id)
        res = solve(p, SolveOptions(N=400, tol=1e-10))
        assert res.converged
        f = res.solution
        worst_b = max(worst_b, abs(f.wp[-1] - p.beta * f.wp[0]))
        nl = f.w[0] + math.fsum(ck * eval_at(f, tk)[0] for ck, tk in zip(p.c, p.tk)) - p.w0
        worst_n = max(worst_n, abs(nl))
    record(10, worst_b <= 1e-8 and worst_n <= 1e-6,
           f"boundary {worst_b:.1e} <= 1e-8, nonlocal {worst_n:.1e} <= 1e-6")


def test_criterion_11_property_suites():
    def trap_ratio(f, exact, weighted=False):
        errs = []
        for n in (10, 20, 40, 80):
            g = Grid(1.0, n)
            s = SampledIntegrand(g, f(g.nodes))
            val = weighted_tail(s, n) if weighted else trapz(s)
            errs.append(abs(val - exact))
        return [a / b for a, b in zip(errs, errs[1:])]

    ratios = trap_ratio(lambda s: s * s, 1 / 3) + trap_ratio(lambda s: s, 1 / 6, weighted=True)
    ok = all(3.6 <= r <= 4.4 for r in ratios)
    test_expr.test_round_trip_random_trees()
    test_gridfn.test_norm_axioms_on_random_grid_functions()
    record(11, ok, f"trapezoid ratios in [{min(ratios):.3f}, {max(ratios):.3f}]; "
                   "1000 parser round trips; 1000 norm-axiom checks")
