"""The integral operator and its Picard iteration.

For a grid function f with right-hand side samples Phi_i = F(t_i, w_i, wp_i, I_i)
the operator returns

    w(t)  = A + t/(beta-1) * I_T + int_0^t (t-s) Phi(s) ds
    wp(t) = I_T/(beta-1) + int_0^t Phi(s) ds

with I_T = int_0^T Phi, B_k = t_k/(beta-1) * I_T + int_0^{t_k} (t_k-s) Phi(s) ds
and A = (w0 - sum_k c_k B_k) / (1 + sum_k c_k). Every integral is a composite
trapezoid on the grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import evaluate_many
from .gridfn import Grid, GridFunction, NonFiniteError, bielecki_distance
from .problem import Problem
from .quadrature import (SampledIntegrand, cumulative_trapz, trapz, volterra_inner,
                         weighted_tail_at, weighted_tails)

__all__ = ["SolveOptions", "SolveResult", "DivergenceError", "evaluate_rhs",
           "apply_operator", "initial_guess", "solve"]

log = logging.getLogger(__name__)

# consecutive growing increments (with q >= 1) treated as divergence
GROWTH_LIMIT = 5


class DivergenceError(RuntimeError):
    def __init__(self, message: str, iteration: int):
        self.iteration = iteration
        super().__init__(f"{message} (iteration {iteration})")


@dataclass(frozen=True)
class SolveOptions:
    N: int = 400
    tol: float = 1e-10
    max_iter: int = 200
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @classmethod
    def for_problem(cls, p: Problem, **overrides) -> "SolveOptions":
        """Defaults, then the problem file's hints, then non-None overrides."""
        values = {}
        for key in ("N", "tol", "max_iter", "gamma"):
            if overrides.get(key) is not None:
                values[key] = overrides[key]
            elif getattr(p, key) is not None:
                values[key] = getattr(p, key)
        return cls(**values)


@dataclass
class SolveResult:
    solution: GridFunction
    iterations: int
    increments: np.ndarray
    q_used: float
    apost_bound: float
    converged: bool
    gamma: float = 1.0
    history: list = field(default_factory=list, repr=False)

    @property
    def certified(self) -> bool:
        return self.q_used < 1.0


def evaluate_rhs(p: Problem, f: GridFunction) -> np.ndarray:
    """Phi_i = F(t_i, w_i, wp_i, I_i) with I the nested Volterra integral."""
    inner = volterra_inner(p.G, f)
    return evaluate_many(p.F, {"t": f.t, "w": f.w, "wp": f.wp, "I": inner}, f.t.shape[0])


def apply_operator(p: Problem, f: GridFunction) -> GridFunction:
    grid = f.grid
    phi = SampledIntegrand(grid, evaluate_rhs(p, f))
    i_total = trapz(phi)
    scale = 1.0 / (p.beta - 1.0)
    b = [tk * scale * i_total + weighted_tail_at(phi, tk) for tk in p.tk]
    a = (p.w0 - math.fsum(ck * bk for ck, bk in zip(p.c, b))) / (1.0 + p.sum_c)
    t = grid.nodes
    w = a + t * scale * i_total + weighted_tails(phi)
    wp = i_total * scale + cumulative_trapz(phi)
    return GridFunction(grid, w, wp)


def initial_guess(p: Problem, grid: Grid) -> GridFunction:
    """Constant w0/(1+sum c): the fixed point when F vanishes."""
    n1 = grid.N + 1
    return GridFunction(grid, np.full(n1, p.w0 / (1.0 + p.sum_c)), np.zeros(n1))


def solve(p: Problem, opts: SolveOptions | None = None, *, keep_history: bool = False) -> SolveResult:
    """Iterate the operator from ``initial_guess`` until the Bielecki increment <= tol.

    Proceeds even when the contraction constant is >= 1 (the condition is only
    sufficient), but then raises DivergenceError if increments grow for
    GROWTH_LIMIT consecutive iterations.
    """
    from .analysis import contraction_constant

    opts = opts or SolveOptions()
    q = contraction_constant(p.LF, p.LG, p.T, p.beta, p.c, opts.gamma).q
    grid = Grid(p.T, opts.N)
    current = initial_guess(p, grid)
    increments: list[float] = []
    history = [current] if keep_history else []
    converged = False
    growth = 0
    for n in range(1, opts.max_iter + 1):
        try:
            nxt = apply_operator(p, current)
        except NonFiniteError:
            raise DivergenceError("iterate became non-finite", n) from None
        inc = bielecki_distance(nxt, current, opts.gamma)
        increments.append(inc)
        current = nxt
        if keep_history:
            history.append(current)
        log.debug("iteration %d: increment %.3e", n, inc)
        if inc <= opts.tol:
            converged = True
            break
        if q >= 1.0 and len(increments) > 1:
            growth = growth + 1 if inc > increments[-2] else 0
            if growth >= GROWTH_LIMIT:
                raise DivergenceError(
                    f"increments grew for {GROWTH_LIMIT} consecutive iterations", n)

    apost = q * increments[-1] / (1.0 - q) if q < 1.0 else math.inf
    return SolveResult(
        solution=current,
        iterations=len(increments),
        increments=np.array(increments),
        q_used=q,
        apost_bound=apost,
        converged=converged,
        gamma=opts.gamma,
        history=history,
    )
