"""Contraction certificate, data-dependence bound, and residual checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import Expression, evaluate_many
from .gridfn import Grid, GridFunction, bielecki_distance, eval_at
from .picard import SolveOptions, evaluate_rhs, solve
from .problem import Problem
from .quadrature import SampledIntegrand, trapz

__all__ = ["ContractionReport", "DependenceReport", "ResidualReport",
           "CertificateError", "StructuralMismatchError", "contraction_constant",
           "optimize_gamma", "l_mu", "dependence_bound", "compare", "residuals"]


class CertificateError(ValueError):
    """The contraction constant is >= 1, so no dependence bound is available."""


class StructuralMismatchError(ValueError):
    """Compared problems differ in T, beta, c or tk."""


@dataclass(frozen=True)
class ContractionReport:
    gamma: float
    q: float
    unique: bool
    sum_c: float
    c_ratio: float
    factors: tuple  # (LF/gamma, 1 + LG/gamma, 1 + [1 + T beta (1 + c_ratio)] e^{gamma T}/(beta-1))


@dataclass(frozen=True)
class DependenceReport:
    bound: float
    measured: float
    L_mu: float
    q: float
    delta_w0: float
    gamma: float

    @property
    def holds(self) -> bool:
        return self.measured <= self.bound


@dataclass(frozen=True)
class ResidualReport:
    ode_residual: np.ndarray
    ode_residual_max: float
    nonlocal_residual: float
    boundary_residual: float


def _c_ratio(sum_c: float) -> float:
    return abs(sum_c / (1.0 + sum_c))


def contraction_constant(LF, LG, T, beta, c, gamma) -> ContractionReport:
    """q = (LF/g)(1 + LG/g)(1 + [1 + {T b + T b |S/(1+S)|}] e^{gT}/(b-1)), S = sum(c)."""
    sum_c = math.fsum(c)
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if not beta > 1:
        raise ValueError(f"beta must exceed 1, got {beta}")
    if sum_c == -1.0:
        raise ValueError("sum of c equals -1")
    if LF < 0 or LG < 0:
        raise ValueError("Lipschitz constants must be non-negative")
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    ratio = _c_ratio(sum_c)
    f1 = LF / gamma
    f2 = 1.0 + LG / gamma
    f3 = 1.0 + (1.0 + (T * beta + T * beta * ratio)) * math.exp(gamma * T) / (beta - 1.0)
    q = f1 * f2 * f3
    return ContractionReport(gamma=gamma, q=q, unique=q < 1.0, sum_c=sum_c,
                             c_ratio=ratio, factors=(f1, f2, f3))


def optimize_gamma(LF, LG, T, beta, c, gamma_range=(0.1, 5.0), points: int = 512):
    """Minimize q over gamma: log-spaced scan, then golden-section on the best bracket.

    Ties go to the smallest gamma. Returns (gamma_star, q_star).
    """
    lo, hi = gamma_range
    if not (0 < lo < hi):
        raise ValueError(f"invalid gamma range {gamma_range}")

    def q_of(g):
        return contraction_constant(LF, LG, T, beta, c, g).q

    grid = np.geomspace(lo, hi, points)
    qs = [q_of(g) for g in grid]
    k = int(np.argmin(qs))
    best_g, best_q = float(grid[k]), qs[k]

    a = float(grid[max(k - 1, 0)])
    b = float(grid[min(k + 1, points - 1)])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    q1, q2 = q_of(x1), q_of(x2)
    for _ in range(80):
        if q1 <= q2:
            b, x2, q2 = x2, x1, q1
            x1 = b - invphi * (b - a)
            q1 = q_of(x1)
        else:
            a, x1, q1 = x1, x2, q2
            x2 = a + invphi * (b - a)
            q2 = q_of(x2)
    g_ref = 0.5 * (a + b)
    q_ref = q_of(g_ref)
    if q_ref < best_q:
        best_g, best_q = g_ref, q_ref
    return best_g, best_q


def l_mu(mu: Expression, T: float, N: int) -> float:
    """Trapezoid integral of mu over [0, T]; mu must be non-negative."""
    grid = Grid(T, N)
    values = evaluate_many(mu, {"t": grid.nodes}, N + 1)
    if np.any(values < 0):
        i = int(np.argmax(values < 0))
        raise ValueError(f"mu is negative at t={grid.nodes[i]:.17g}")
    return trapz(SampledIntegrand(grid, values))


def dependence_bound(w0, w0_tilde, L_mu, beta, T, c, q) -> float:
    """(|1/(1+S)| |w0 - w0~| + beta L_mu/(beta-1) [1 + (1 + |S/(1+S)|) T]) / (1 - q)."""
    if q >= 1.0:
        raise CertificateError(f"contraction constant q={q} >= 1; bound unavailable")
    if not beta > 1:
        raise ValueError(f"beta must exceed 1, got {beta}")
    if L_mu < 0:
        raise ValueError("L_mu must be non-negative")
    sum_c = math.fsum(c)
    if sum_c == -1.0:
        raise ValueError("sum of c equals -1")
    numerator = (abs(1.0 / (1.0 + sum_c)) * abs(w0 - w0_tilde)
                 + beta * L_mu / (beta - 1.0) * (1.0 + (1.0 + _c_ratio(sum_c)) * T))
    return numerator / (1.0 - q)


def compare(p: Problem, p_tilde: Problem, mu: Expression, opts: SolveOptions) -> DependenceReport:
    """Solve both problems and check the measured distance against the bound.

    q comes from p's Lipschitz constants at ``opts.gamma``.
    """
    for key in ("T", "beta", "c", "tk"):
        if getattr(p, key) != getattr(p_tilde, key):
            raise StructuralMismatchError(
                f"problems differ in {key}: {getattr(p, key)!r} vs {getattr(p_tilde, key)!r}")
    q = contraction_constant(p.LF, p.LG, p.T, p.beta, p.c, opts.gamma).q
    lm = l_mu(mu, p.T, opts.N)
    bound = dependence_bound(p.w0, p_tilde.w0, lm, p.beta, p.T, p.c, q)
    w_star = solve(p, opts).solution
    v_star = solve(p_tilde, opts).solution
    measured = bielecki_distance(w_star, v_star, opts.gamma)
    return DependenceReport(bound=bound, measured=measured, L_mu=lm, q=q,
                            delta_w0=abs(p.w0 - p_tilde.w0), gamma=opts.gamma)


def residuals(p: Problem, f: GridFunction) -> ResidualReport:
    """Residuals of the ODE, the nonlocal condition and the boundary condition.

    The ODE residual differentiates the derivative channel (second-order
    centred differences, one-sided at the ends) and subtracts F.
    """
    d_wp = np.gradient(f.wp, f.grid.h, edge_order=2)
    ode = d_wp - evaluate_rhs(p, f)
    nonlocal_terms = [f.w[0]] + [ck * eval_at(f, tk)[0] for ck, tk in zip(p.c, p.tk)]
    nonlocal_res = math.fsum(nonlocal_terms) - p.w0
    boundary = float(f.wp[-1] - p.beta * f.wp[0])
    return ResidualReport(ode_residual=ode, ode_residual_max=float(np.max(np.abs(ode))),
                          nonlocal_residual=nonlocal_res, boundary_residual=boundary)
