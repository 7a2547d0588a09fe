"""Solver and analysis tools for second-order Volterra integrodifferential
equations with nonlocal multi-point and derivative-ratio boundary conditions."""

from ._backend import name as backend_name, use_backend
from .analysis import (compare, contraction_constant, dependence_bound, l_mu,
                       optimize_gamma, residuals)
from .expr import evaluate, parse, to_text
from .gridfn import Grid, GridFunction, bielecki_distance, bielecki_norm, eval_at
from .picard import SolveOptions, SolveResult, apply_operator, initial_guess, solve
from .problem import Problem, builtin_example, load_problem, serialize, validate

__version__ = "0.1.0"
