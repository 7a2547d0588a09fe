"""Grid functions: paired value/derivative samples on a uniform grid over [0, T]."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["Grid", "GridFunction", "NonFiniteError", "eval_at", "bielecki_norm",
           "bielecki_distance"]

# relative slack for treating an off-grid query as a node
_NODE_SNAP = 1e-9


class NonFiniteError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform grid t_i = i*h, i = 0..N, with the last node pinned to T."""

    T: float
    N: int

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive and finite, got {self.T}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")

    @property
    def h(self) -> float:
        return self.T / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.N + 1) * self.h
        t[-1] = self.T
        t.setflags(write=False)
        return t

    def locate(self, t: float) -> tuple[int, float]:
        """Return (j, theta) with t = t_j + theta*h, 0 <= theta <= 1, j <= N-1.

        theta is snapped to 0 (or j to the nearest node) when t is within a
        relative 1e-9 of a node, so nonlocal points such as 0.2 hit nodes exactly.
        """
        if not (0.0 <= t <= self.T):
            raise ValueError(f"t={t} outside [0, {self.T}]")
        x = t / self.h
        k = round(x)
        if abs(x - k) <= _NODE_SNAP * max(1.0, x):
            if k >= self.N:
                return self.N - 1, 1.0
            return k, 0.0
        j = min(int(math.floor(x)), self.N - 1)
        return j, (t - self.nodes[j]) / self.h

    def node_index(self, t: float) -> int | None:
        j, theta = self.locate(t)
        if theta == 0.0:
            return j
        if theta == 1.0:
            return j + 1
        return None


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Element of C^1([0, T]) sampled as values ``w`` and derivatives ``wp``."""

    grid: Grid
    w: np.ndarray
    wp: np.ndarray

    def __post_init__(self):
        n1 = self.grid.N + 1
        w = np.array(self.w, dtype=float)
        wp = np.array(self.wp, dtype=float)
        if w.shape != (n1,) or wp.shape != (n1,):
            raise ValueError(f"expected arrays of length {n1}, got {w.shape} and {wp.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(wp))):
            raise NonFiniteError("grid function has non-finite samples")
        w.setflags(write=False)
        wp.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "wp", wp)

    @classmethod
    def from_callables(cls, grid: Grid, w, wp) -> "GridFunction":
        t = grid.nodes
        return cls(grid, np.broadcast_to(w(t), t.shape), np.broadcast_to(wp(t), t.shape))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.w - other.w, self.wp - other.wp)


def _check_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")


def hermite(theta: float, h: float, y0: float, y1: float, m0: float, m1: float):
    """Cubic Hermite value and derivative at t_j + theta*h on one cell."""
    t2 = theta * theta
    t3 = t2 * theta
    value = ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * m0
             + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * m1)
    deriv = ((6 * t2 - 6 * theta) * (y0 - y1) / h + (3 * t2 - 4 * theta + 1) * m0
             + (3 * t2 - 2 * theta) * m1)
    return value, deriv


def eval_at(f: GridFunction, t: float) -> tuple[float, float]:
    """Value and derivative at any t in [0, T]; node queries return the samples."""
    j, theta = f.grid.locate(t)
    if theta == 0.0:
        return float(f.w[j]), float(f.wp[j])
    if theta == 1.0:
        return float(f.w[j + 1]), float(f.wp[j + 1])
    return hermite(theta, f.grid.h, f.w[j], f.w[j + 1], f.wp[j], f.wp[j + 1])


def bielecki_norm(f: GridFunction, gamma: float) -> float:
    """max_i (|w_i| + |wp_i|) exp(-gamma t_i)."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    weighted = (np.abs(f.w) + np.abs(f.wp)) * np.exp(-gamma * f.t)
    return float(np.max(weighted))


def bielecki_distance(f: GridFunction, g: GridFunction, gamma: float) -> float:
    _check_same_grid(f, g)
    return bielecki_norm(f - g, gamma)
