"""Problem model, validation, the line-based problem file format, and built-ins.

The problem is

    w''(t) = F(t, w(t), w'(t), I(t)),   I(t) = int_0^t G(t, s, w(s), w'(s)) ds,
    w(0) + sum_k c_k w(t_k) = w0,
    w'(T) = beta * w'(0),

on J = [0, T] with 1 < beta and sum(c) != -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .expr import Expression, ExpressionError, parse

__all__ = ["Problem", "ProblemError", "F_VARS", "G_VARS", "MU_VARS", "validate",
           "load_problem", "read_problem", "serialize", "builtin_example", "BUILTIN_IDS"]

F_VARS = frozenset({"t", "w", "wp", "I"})
G_VARS = frozenset({"t", "s", "w", "wp"})
MU_VARS = frozenset({"t"})

REQUIRED_KEYS = ("T", "beta", "w0", "c", "tk", "LF", "LG", "F", "G")
OPTIONAL_KEYS = ("label", "gamma", "N", "tol", "max_iter")


class ProblemError(ValueError):
    """Raised for malformed problem files or problems violating the assumptions."""

    def __init__(self, message: str, violations: list[str] | None = None):
        self.violations = list(violations or [])
        if self.violations:
            message = message + ": " + "; ".join(self.violations)
        super().__init__(message)


@dataclass(frozen=True)
class Problem:
    T: float
    beta: float
    w0: float
    c: tuple
    tk: tuple
    F: Expression
    G: Expression
    LF: float
    LG: float
    label: str = ""
    # solver hints carried by problem files
    gamma: float | None = None
    N: int | None = None
    tol: float | None = None
    max_iter: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))
        object.__setattr__(self, "tk", tuple(float(x) for x in self.tk))

    @property
    def p(self) -> int:
        return len(self.c)

    @property
    def sum_c(self) -> float:
        return math.fsum(self.c)

    def replace(self, **changes) -> "Problem":
        return replace(self, **changes)


def validate(p: Problem) -> list[str]:
    """Return every violated standing assumption; an empty list means ok."""
    out = []
    if not (p.T > 0 and math.isfinite(p.T)):
        out.append("T must be positive")
    if not (p.beta > 1 and math.isfinite(p.beta)):
        out.append("beta must exceed 1")
    if len(p.c) != len(p.tk):
        out.append(f"length mismatch: {len(p.c)} coefficients c but {len(p.tk)} points tk")
    if len(p.c) < 1:
        out.append("at least one nonlocal point is required")
    if p.tk:
        if p.tk[0] <= 0:
            out.append("tk must be positive")
        if any(b <= a for a, b in zip(p.tk, p.tk[1:])):
            out.append("tk must be strictly increasing")
        if p.tk[-1] > p.T:
            out.append("tk must not exceed T")
    if p.c and p.sum_c == -1.0:
        out.append("sum of c equals -1")
    if not (p.LF >= 0 and math.isfinite(p.LF)):
        out.append("LF must be a finite non-negative number")
    if not (p.LG >= 0 and math.isfinite(p.LG)):
        out.append("LG must be a finite non-negative number")
    if not math.isfinite(p.w0):
        out.append("w0 must be finite")
    if not set(p.F.variables()) <= F_VARS:
        out.append("F uses variables outside {t, w, wp, I}")
    if not set(p.G.variables()) <= G_VARS:
        out.append("G uses variables outside {t, s, w, wp}")
    return out


# -- file format ----------------------------------------------------------------

def _real(key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ProblemError(f"malformed number for {key}: {text!r}") from None
    if not math.isfinite(value):
        raise ProblemError(f"non-finite value for {key}: {text!r}")
    return value


def _integer(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ProblemError(f"malformed integer for {key}: {text!r}") from None


def _reals(key: str, text: str) -> tuple:
    parts = [s.strip() for s in text.split(",")]
    if not parts or any(not s for s in parts):
        raise ProblemError(f"malformed list for {key}: {text!r}")
    return tuple(_real(key, s) for s in parts)


def load_problem(text: str) -> Problem:
    """Parse and validate a problem file's contents."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ProblemError(f"line {lineno}: expected 'key = value'")
        if key not in REQUIRED_KEYS and key not in OPTIONAL_KEYS:
            raise ProblemError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ProblemError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    missing = [k for k in REQUIRED_KEYS if k not in entries]
    if missing:
        raise ProblemError(f"missing key {', '.join(missing)}")

    try:
        F = parse(entries["F"], F_VARS)
        G = parse(entries["G"], G_VARS)
    except ExpressionError as exc:
        raise ProblemError(f"expression error: {exc}") from exc

    p = Problem(
        T=_real("T", entries["T"]),
        beta=_real("beta", entries["beta"]),
        w0=_real("w0", entries["w0"]),
        c=_reals("c", entries["c"]),
        tk=_reals("tk", entries["tk"]),
        F=F,
        G=G,
        LF=_real("LF", entries["LF"]),
        LG=_real("LG", entries["LG"]),
        label=entries.get("label", ""),
        gamma=_real("gamma", entries["gamma"]) if "gamma" in entries else None,
        N=_integer("N", entries["N"]) if "N" in entries else None,
        tol=_real("tol", entries["tol"]) if "tol" in entries else None,
        max_iter=_integer("max_iter", entries["max_iter"]) if "max_iter" in entries else None,
    )
    violations = validate(p)
    if violations:
        raise ProblemError("invalid problem", violations)
    return p


def read_problem(path) -> Problem:
    with open(path, encoding="utf-8") as fh:
        return load_problem(fh.read())


def serialize(p: Problem) -> str:
    """Render ``p`` in the problem file format (reals round-trip exactly)."""
    lines = []
    if p.label:
        lines.append(f"label = {p.label}")
    lines += [
        f"T = {p.T!r}",
        f"beta = {p.beta!r}",
        f"w0 = {p.w0!r}",
        "c = " + ", ".join(repr(x) for x in p.c),
        "tk = " + ", ".join(repr(x) for x in p.tk),
        f"LF = {p.LF!r}",
        f"LG = {p.LG!r}",
        f"F = {p.F.source or p.F}",
        f"G = {p.G.source or p.G}",
    ]
    for key in ("gamma", "N", "tol", "max_iter"):
        value = getattr(p, key)
        if value is not None:
            lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"


# -- built-in examples ----------------------------------------------------------

_EX1_G = "(w - exp(s/10)/10*sin(w) + exp(s/10)/10*cos(wp))/10"
_EX1_TK = (0.2, 0.4, 0.6, 0.8, 1.0)
_EX1_C = (1.0, 1.0, -1.0, 0.0, 1.0)
# w0 that makes exp(t/10) satisfy the nonlocal condition exactly
_EX1_W0 = 1.0 + sum(c * math.exp(t / 10) for c, t in zip(_EX1_C, _EX1_TK))


def _ex1(constant: str, label: str) -> Problem:
    return Problem(
        T=1.0,
        beta=math.exp(0.1),
        w0=_EX1_W0,
        c=_EX1_C,
        tk=_EX1_TK,
        F=parse(f"0.010540 + {constant} - cos(w)/1000 - sin(wp)/100 + I/100", F_VARS),
        G=parse(_EX1_G, G_VARS),
        LF=0.01,
        LG=(1 + math.exp(0.1)) / 10,
        label=label,
    )


def _ex2() -> Problem:
    return Problem(
        T=2.0,
        beta=5.0,
        w0=1.25,
        c=(1.0, 1.0, 1.0, 1.0),
        tk=(0.5, 1.0, 1.5, 2.0),
        F=parse("2/10 - t^2/1000 - (9-t)/1000 + cos(w)/100 - wp/100 + I/100", F_VARS),
        G=parse("(1+2*s)/10*sin(w) + wp", G_VARS),
        LF=0.01,
        LG=1.0,
        label="w0 derived from w=(t+t^2)/10 (published value 1.35)",
    )


_BUILTINS = {
    "ex1": lambda: _ex1(
        "sin(1/10)/10",
        "as published; c3=-1 at t3=0.6 (published as w(t2)-w(t2)); "
        "w0 derived from w=exp(t/10) (published value 3.10)"),
    "ex1_corrected": lambda: _ex1(
        "sin(1/10)/100",
        "constant sin(1/10)/100 so that exp(t/10) solves it; "
        "w0 derived (published value 3.10)"),
    "ex2": _ex2,
}

BUILTIN_IDS = tuple(_BUILTINS)


def builtin_example(id: str) -> Problem:
    try:
        return _BUILTINS[id]()
    except KeyError:
        raise ProblemError(f"unknown example id {id!r}; choose from {', '.join(BUILTIN_IDS)}") from None

