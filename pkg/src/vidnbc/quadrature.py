"""Composite trapezoid kernels: plain, cumulative, (t - s)-weighted and nested.

All sums run in ascending index order so results do not depend on how numpy
chooses to reduce; ``np.cumsum`` is a sequential accumulate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .expr import Expression, compile_program
from .gridfn import Grid, GridFunction

__all__ = ["SampledIntegrand", "trapz", "cumulative_trapz", "weighted_tail",
           "weighted_tails", "weighted_tail_at", "volterra_inner"]

G_VARS = ("t", "s", "w", "wp")


@dataclass(frozen=True, eq=False)
class SampledIntegrand:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.N + 1,):
            raise ValueError(f"expected {self.grid.N + 1} samples, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("integrand has non-finite samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _ascending_sum(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    return float(np.cumsum(x)[-1])


def trapz(f: SampledIntegrand) -> float:
    """h * (f_0/2 + f_1 + ... + f_{N-1} + f_N/2)."""
    v = f.values
    terms = np.concatenate(([0.5 * v[0]], v[1:-1], [0.5 * v[-1]]))
    return f.grid.h * _ascending_sum(terms)


def cumulative_trapz(f: SampledIntegrand) -> np.ndarray:
    """out[0] = 0, out[i] = out[i-1] + h*(f_{i-1} + f_i)/2."""
    v = f.values
    out = np.empty_like(v)
    out[0] = 0.0
    out[1:] = np.cumsum(f.grid.h * (v[:-1] + v[1:]) / 2)
    return out


def weighted_tail(f: SampledIntegrand, j: int) -> float:
    """Trapezoid approximation of the integral of (t_j - s) f(s) over [0, t_j]."""
    if not 0 <= j <= f.grid.N:
        raise IndexError(f"node index {j} out of range 0..{f.grid.N}")
    if j == 0:
        return 0.0
    t = f.grid.nodes
    g = (t[j] - t[: j + 1]) * f.values[: j + 1]
    g[0] *= 0.5
    g[-1] *= 0.5
    return f.grid.h * _ascending_sum(g)


def weighted_tails(f: SampledIntegrand) -> np.ndarray:
    """weighted_tail at every node in O(N).

    Uses linearity of the trapezoid rule: the tail at t_i is
    t_i * C_i - D_i with C, D the cumulative trapezoids of f and s*f.
    """
    t = f.grid.nodes
    c = cumulative_trapz(f)
    d = cumulative_trapz(SampledIntegrand(f.grid, t * f.values))
    return t * c - d


def weighted_tail_at(f: SampledIntegrand, t: float) -> float:
    """Weighted tail at an arbitrary t in [0, T].

    Whole cells below t are summed with weights (t - s_i); the partial cell
    [t_j, t] adds one trapezoid whose right endpoint vanishes because the
    weight (t - s) is zero there.
    """
    grid = f.grid
    node = grid.node_index(t)
    if node is not None:
        return weighted_tail(f, node)
    j, theta = grid.locate(t)
    s = grid.nodes[: j + 1]
    g = (t - s) * f.values[: j + 1]
    partial = 0.5 * (t - s[j]) * g[-1]
    if j == 0:
        return partial
    g[0] *= 0.5
    g[-1] *= 0.5
    return grid.h * _ascending_sum(g) + partial


def volterra_inner(G: Expression, f: GridFunction) -> np.ndarray:
    """I(t_i) = trapezoid over sigma-nodes 0..i of G(t_i, sigma, w, wp).

    O(N^2) expression evaluations, done by the active kernel backend.
    """
    prog = compile_program(G, G_VARS)
    t = np.ascontiguousarray(f.t)
    out = np.empty(t.shape[0])
    status, instr = _backend.active().volterra_rows(
        prog.code, prog.consts, t, np.ascontiguousarray(f.w),
        np.ascontiguousarray(f.wp), f.grid.h, out)
    prog.raise_for(status, instr)
    return out
