"""Command-line front end.

    vidnbc solve FILE [--n N] [--tol X] [--max-iter K] [--gamma G | --optimize-gamma] [--force]
    vidnbc analyze FILE [--gamma G | --optimize-gamma]
    vidnbc compare FILE1 FILE2 [--mu EXPR]
    vidnbc verify FILE --solution EXPR --solution-deriv EXPR [--n N]
    vidnbc examples [--dump ID]

FILE is a problem file path or a built-in id (ex1, ex1_corrected, ex2).
Data goes to stdout (or --output); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from .analysis import (CertificateError, StructuralMismatchError, compare,
                       contraction_constant, optimize_gamma, residuals)
from .expr import EvaluationError, ExpressionError, evaluate_many, parse
from .gridfn import Grid, GridFunction
from .picard import DivergenceError, SolveOptions, solve
from .problem import (BUILTIN_IDS, MU_VARS, Problem, ProblemError, builtin_example,
                      read_problem, serialize)

EXIT_OK = 0
EXIT_LOAD = 1
EXIT_EXPR = 2
EXIT_NOCONV = 3
EXIT_CHECK = 4
EXIT_MISMATCH = 5

GAMMA_RANGE = (0.1, 5.0)


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), ".17g")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def _report_rows(report: dict) -> list[tuple[str, str]]:
    rows = []
    for key, value in report.items():
        if isinstance(value, (list, tuple, np.ndarray)):
            rows.extend((f"{key}_{i}", _cell(v)) for i, v in enumerate(value))
        else:
            rows.append((key, _cell(value)))
    return rows


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating, int, np.integer)):
        return fmt(value)
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _diag(message: str) -> None:
    print(message, file=sys.stderr)


def _report_text(title: str, report: dict) -> str:
    lines = [f"# {title}"]
    lines += [f"{k}: {v}" for k, v in _report_rows(report)]
    return "\n".join(lines)


def _load(source: str) -> Problem:
    if not os.path.exists(source) and source in BUILTIN_IDS:
        return builtin_example(source)
    try:
        return read_problem(source)
    except OSError as exc:
        raise CliError(f"cannot read {source}: {exc.strerror or exc}", EXIT_LOAD) from None
    except ProblemError as exc:
        raise CliError(f"{source}: {exc}", EXIT_LOAD) from None


def _options(args, p: Problem) -> SolveOptions:
    try:
        opts = SolveOptions.for_problem(p, N=getattr(args, "n", None), tol=getattr(args, "tol", None),
                                        max_iter=getattr(args, "max_iter", None), gamma=args.gamma)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_LOAD) from None
    if getattr(args, "optimize_gamma", False):
        g, _ = optimize_gamma(p.LF, p.LG, p.T, p.beta, p.c, GAMMA_RANGE)
        opts = SolveOptions(N=opts.N, tol=opts.tol, max_iter=opts.max_iter, gamma=g)
    return opts


def contraction_dict(p: Problem, gamma: float) -> dict:
    rep = contraction_constant(p.LF, p.LG, p.T, p.beta, p.c, gamma)
    out = asdict(rep)
    out["factors"] = list(rep.factors)
    out["verdict"] = "unique" if rep.unique else "not certified"
    return out


# -- commands -------------------------------------------------------------------

def cmd_solve(args) -> int:
    p = _load(args.file)
    opts = _options(args, p)
    contraction = contraction_dict(p, opts.gamma)
    if not contraction["unique"] and not args.force:
        _diag(_report_text("contraction", contraction))
        raise CliError(f"q = {fmt(contraction['q'])} >= 1 at gamma = {fmt(opts.gamma)}; "
                       "uniqueness not certified (use --force to iterate anyway)", EXIT_CHECK)
    try:
        result = solve(p, opts)
    except DivergenceError as exc:
        raise CliError(f"diverged: {exc}", EXIT_NOCONV) from None
    sol = result.solution
    ode = residuals(p, sol).ode_residual
    summary = {
        "iterations": result.iterations,
        "converged": result.converged,
        "last_increment": float(result.increments[-1]),
        "q_used": result.q_used,
        "apost_bound": result.apost_bound,
        "gamma": opts.gamma,
        "n": opts.N,
        "tol": opts.tol,
    }
    if args.out == "json":
        doc = {
            "contraction": contraction,
            "result": dict(summary, increments=result.increments),
            "solution": {"t": sol.t, "w": sol.w, "wp": sol.wp, "ode_residual": ode},
        }
        _emit(args, json.dumps(_jsonable(doc), indent=2) + "\n")
    else:
        _diag(_report_text("contraction", contraction))
        _diag(_report_text("solve", summary))
        rows = [[fmt(a), fmt(b), fmt(c), fmt(d)] for a, b, c, d in zip(sol.t, sol.w, sol.wp, ode)]
        _emit(args, _csv_text(["t", "w", "wp", "ode_residual"], rows))
    if not result.converged:
        _diag(f"not converged after {result.iterations} iterations")
        return EXIT_NOCONV
    return EXIT_OK


def cmd_analyze(args) -> int:
    p = _load(args.file)
    if args.optimize_gamma:
        gamma, _ = optimize_gamma(p.LF, p.LG, p.T, p.beta, p.c, GAMMA_RANGE)
    else:
        gamma = args.gamma if args.gamma is not None else (p.gamma or 1.0)
    try:
        report = contraction_dict(p, gamma)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_LOAD) from None
    if args.out == "json":
        _emit(args, json.dumps(_jsonable(report), indent=2) + "\n")
    else:
        _emit(args, _csv_text(["field", "value"], _report_rows(report)))
    return EXIT_OK


def cmd_compare(args) -> int:
    p = _load(args.file1)
    p_tilde = _load(args.file2)
    try:
        mu = parse(args.mu, MU_VARS)
    except ExpressionError as exc:
        raise CliError(f"--mu: {exc}", EXIT_LOAD) from None
    opts = _options(args, p)
    if not getattr(args, "optimize_gamma", False) and args.gamma is None and \
            not contraction_constant(p.LF, p.LG, p.T, p.beta, p.c, opts.gamma).unique:
        g, _ = optimize_gamma(p.LF, p.LG, p.T, p.beta, p.c, GAMMA_RANGE)
        opts = SolveOptions(N=opts.N, tol=opts.tol, max_iter=opts.max_iter, gamma=g)
    try:
        rep = compare(p, p_tilde, mu, opts)
    except StructuralMismatchError as exc:
        raise CliError(str(exc), EXIT_MISMATCH) from None
    except CertificateError as exc:
        raise CliError(str(exc), EXIT_CHECK) from None
    except ValueError as exc:  # negative mu samples
        raise CliError(str(exc), EXIT_EXPR) from None
    except DivergenceError as exc:
        raise CliError(f"diverged: {exc}", EXIT_NOCONV) from None
    report = asdict(rep)
    report["holds"] = rep.holds
    if args.out == "json":
        _emit(args, json.dumps(_jsonable(report), indent=2) + "\n")
    else:
        _emit(args, _csv_text(["field", "value"], _report_rows(report)))
    if not rep.holds:
        _diag(f"bound violated: measured {fmt(rep.measured)} > bound {fmt(rep.bound)}")
        return EXIT_CHECK
    return EXIT_OK


def cmd_verify(args) -> int:
    p = _load(args.file)
    try:
        sol = parse(args.solution, MU_VARS)
        der = parse(args.solution_deriv, MU_VARS)
    except ExpressionError as exc:
        raise CliError(f"claimed solution: {exc}", EXIT_LOAD) from None
    grid = Grid(p.T, args.n)
    t = grid.nodes
    f = GridFunction(grid, evaluate_many(sol, {"t": t}, t.size), evaluate_many(der, {"t": t}, t.size))
    rep = residuals(p, f)
    passed = (rep.ode_residual_max <= args.ode_tol
              and abs(rep.nonlocal_residual) <= args.tol
              and abs(rep.boundary_residual) <= args.tol)
    report = {
        "ode_residual_max": rep.ode_residual_max,
        "nonlocal_residual": rep.nonlocal_residual,
        "boundary_residual": rep.boundary_residual,
        "passed": passed,
    }
    if args.out == "json":
        doc = dict(report, t=t, ode_residual=rep.ode_residual)
        _emit(args, json.dumps(_jsonable(doc), indent=2) + "\n")
    else:
        _emit(args, _csv_text(["field", "value"], _report_rows(report)))
    return EXIT_OK if passed else EXIT_CHECK


def cmd_examples(args) -> int:
    if args.dump:
        try:
            _emit(args, serialize(builtin_example(args.dump)))
        except ProblemError as exc:
            raise CliError(str(exc), EXIT_LOAD) from None
        return EXIT_OK
    lines = [f"{pid}\t{builtin_example(pid).label}" for pid in BUILTIN_IDS]
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------

def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidnbc", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", choices=("csv", "json"), default="csv")
    common.add_argument("--output", metavar="PATH", help="write data here instead of stdout")

    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="Picard-iterate a problem to its fixed point")
    s.add_argument("file")
    s.add_argument("--n", type=_positive_int, help="grid subintervals")
    s.add_argument("--tol", type=_positive_float)
    s.add_argument("--max-iter", type=_positive_int)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=_positive_float)
    g.add_argument("--optimize-gamma", action="store_true")
    s.add_argument("--force", action="store_true", help="iterate even when q >= 1")
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("analyze", parents=[common], help="contraction constant and verdict")
    a.add_argument("file")
    g = a.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=_positive_float)
    g.add_argument("--optimize-gamma", action="store_true")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("compare", parents=[common], help="data-dependence bound between two problems")
    c.add_argument("file1")
    c.add_argument("file2")
    c.add_argument("--mu", default="0", help="bound mu(t) on |F - F~| (expression in t)")
    c.add_argument("--n", type=_positive_int)
    c.add_argument("--tol", type=_positive_float)
    c.add_argument("--max-iter", type=_positive_int)
    g = c.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=_positive_float)
    g.add_argument("--optimize-gamma", action="store_true")
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("verify", parents=[common], help="residuals of a claimed closed-form solution")
    v.add_argument("file")
    v.add_argument("--solution", required=True)
    v.add_argument("--solution-deriv", required=True)
    v.add_argument("--n", type=_positive_int, default=400)
    v.add_argument("--tol", type=_positive_float, default=1e-6,
                   help="tolerance for the nonlocal and boundary residuals")
    v.add_argument("--ode-tol", type=_positive_float, default=1e-3)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("examples", parents=[common], help="list built-in examples")
    e.add_argument("--dump", metavar="ID", help="print the problem file for a built-in")
    e.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _diag(f"error: {exc}")
        return exc.code
    except EvaluationError as exc:
        _diag(f"error: expression evaluation failed: {exc}")
        return EXIT_EXPR


if __name__ == "__main__":
    sys.exit(main())
