"""Small expression language for problem right-hand sides.

Users write F(t, w, wp, I), G(t, s, w, wp) and mu(t) as text. ``parse`` turns
the text into an immutable tree, ``evaluate`` computes it for one set of
bindings, and ``compile_program`` lowers it to a flat postfix program that the
array kernels (compiled or numpy) execute over many points at once.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-'? power
    power  := atom ('^' factor)?
    atom   := number | name | name '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

__all__ = [
    "BUILTIN_FUNCTIONS",
    "CONSTANTS",
    "Binary",
    "Call",
    "EvaluationError",
    "Expression",
    "ExpressionError",
    "Literal",
    "Neg",
    "ParseError",
    "Program",
    "Var",
    "compile_program",
    "evaluate",
    "evaluate_many",
    "parse",
    "to_text",
]

CONSTANTS = {"pi": math.pi, "e": math.e}

BUILTIN_FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "sinh", "cosh")


class ExpressionError(Exception):
    """Base class for parse and evaluation failures.

    ``pos`` is the character offset in the source text, or None when unknown.
    """

    def __init__(self, message: str, pos: int | None = None):
        self.message = message
        self.pos = pos
        where = f" at position {pos}" if pos is not None else ""
        super().__init__(f"{message}{where}")


class ParseError(ExpressionError):
    pass


class EvaluationError(ExpressionError):
    pass


# -- tree ---------------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    value: float
    pos: int = field(default=0, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"literal must be finite, got {self.value!r}")


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"
    pos: int = field(default=0, compare=False)


Node = Union[Literal, Var, Neg, Binary, Call]


@dataclass(frozen=True)
class Expression:
    """A parsed formula together with the variable names it may use."""

    root: Node
    allowed: frozenset = frozenset()
    source: str = field(default="", compare=False)

    def variables(self) -> set[str]:
        return _collect_vars(self.root)

    def __str__(self) -> str:
        return self.source or to_text(self)


def _collect_vars(node: Node) -> set[str]:
    if isinstance(node, Var):
        return set() if node.name in CONSTANTS else {node.name}
    if isinstance(node, Literal):
        return set()
    if isinstance(node, Neg):
        return _collect_vars(node.operand)
    if isinstance(node, Call):
        return _collect_vars(node.arg)
    return _collect_vars(node.left) | _collect_vars(node.right)


# -- tokenizer ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, allowed: frozenset):
        self.tokens = _tokenize(text)
        self.i = 0
        self.allowed = allowed

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Binary(op, node, self.term(), pos)
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Binary(op, node, self.factor(), pos)
        return node

    def factor(self) -> Node:
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.power(), pos)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.take()
            # exponent is a factor: right-associative, allows 2^-t
            return Binary("^", base, self.factor(), pos)
        return base

    def atom(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            value = float(text)
            if not math.isfinite(value):
                raise ParseError(f"numeric literal {text!r} is not finite", pos)
            return Literal(value, pos)
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if text not in BUILTIN_FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg, pos)
            if text not in self.allowed and text not in CONSTANTS:
                raise ParseError(f"unknown variable {text!r}", pos)
            return Var(text, pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", pos)


def parse(text: str, allowed_vars) -> Expression:
    """Parse ``text`` into an Expression over ``allowed_vars`` (plus pi and e)."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    allowed = frozenset(allowed_vars)
    root = _Parser(text, allowed).parse()
    return Expression(root, allowed, text.strip())


# -- scalar evaluation ----------------------------------------------------------

_SCALAR_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "abs": abs,
}


def _finite(value: float, node: Node) -> float:
    if not math.isfinite(value):
        raise EvaluationError("non-finite result", node.pos)
    return value


def _eval(node: Node, env: Mapping[str, float]) -> float:
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, Var):
        try:
            return float(env[node.name])
        except KeyError:
            if node.name in CONSTANTS:
                return CONSTANTS[node.name]
            raise EvaluationError(f"missing binding for {node.name!r}", node.pos) from None
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        x = _eval(node.arg, env)
        if node.func == "log":
            if x <= 0.0:
                raise EvaluationError("log of non-positive value", node.pos)
            return math.log(x)
        if node.func == "sqrt":
            if x < 0.0:
                raise EvaluationError("sqrt of negative value", node.pos)
            return math.sqrt(x)
        try:
            return _finite(_SCALAR_FUNCS[node.func](x), node)
        except (OverflowError, ValueError):
            raise EvaluationError(f"{node.func} out of range", node.pos) from None
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    op = node.op
    if op == "+":
        return _finite(a + b, node)
    if op == "-":
        return _finite(a - b, node)
    if op == "*":
        return _finite(a * b, node)
    if op == "/":
        if b == 0.0:
            raise EvaluationError("division by zero", node.pos)
        return _finite(a / b, node)
    if a == 0.0 and b < 0.0:
        raise EvaluationError("division by zero", node.pos)
    if a < 0.0 and not float(b).is_integer():
        raise EvaluationError("negative base with non-integer exponent", node.pos)
    try:
        return _finite(math.pow(a, b), node)
    except OverflowError:
        raise EvaluationError("non-finite result", node.pos) from None


def evaluate(e: Expression, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` in double precision. pi and e are bound automatically."""
    return _eval(e.root, bindings)


# -- canonical text -------------------------------------------------------------

def _fmt_literal(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        text = str(int(value))
    else:
        text = repr(value)
    return f"({text})" if value < 0 else text


def _text(node: Node) -> str:
    if isinstance(node, Literal):
        return _fmt_literal(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_text(node.operand)})"
    if isinstance(node, Call):
        inner = _text(node.arg)
        if isinstance(node.arg, Binary):
            inner = inner[1:-1]
        return f"{node.func}({inner})"
    return f"({_text(node.left)} {node.op} {_text(node.right)})"


def to_text(e: Expression | Node) -> str:
    """Fully parenthesized rendering that parses back to the same tree."""
    return _text(e.root if isinstance(e, Expression) else e)


# -- postfix programs for the array kernels ------------------------------------

OP_CONST, OP_VAR, OP_NEG, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW = range(8)
OP_FUNC = 10  # OP_FUNC + index into BUILTIN_FUNCTIONS
_BINOPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}

# kernel status codes; 0 is success
ERR_MESSAGES = {
    1: "division by zero",
    2: "log of non-positive value",
    3: "sqrt of negative value",
    4: "negative base with non-integer exponent",
    5: "non-finite result",
}


@dataclass(frozen=True, eq=False)
class Program:
    """Postfix form of an expression over an ordered variable list.

    ``code`` rows are (opcode, argument, source position).
    """

    code: np.ndarray
    consts: np.ndarray
    varnames: tuple
    depth: int

    def raise_for(self, status: int, instr: int) -> None:
        if status:
            raise EvaluationError(ERR_MESSAGES.get(status, "evaluation failed"),
                                  int(self.code[instr, 2]))


@functools.lru_cache(maxsize=64)
def compile_program(e: Expression, varnames: tuple) -> Program:
    """Lower ``e`` to postfix with variables bound to positions in ``varnames``."""
    code: list[tuple[int, int, int]] = []
    consts: list[float] = []
    depth = 0
    max_depth = 0

    def push(op, arg, pos, delta):
        nonlocal depth, max_depth
        code.append((op, arg, pos))
        depth += delta
        max_depth = max(max_depth, depth)

    def emit(node: Node):
        if isinstance(node, Literal):
            consts.append(node.value)
            push(OP_CONST, len(consts) - 1, node.pos, 1)
        elif isinstance(node, Var):
            if node.name in varnames:
                push(OP_VAR, varnames.index(node.name), node.pos, 1)
            elif node.name in CONSTANTS:
                consts.append(CONSTANTS[node.name])
                push(OP_CONST, len(consts) - 1, node.pos, 1)
            else:
                raise EvaluationError(f"missing binding for {node.name!r}", node.pos)
        elif isinstance(node, Neg):
            emit(node.operand)
            push(OP_NEG, 0, node.pos, 0)
        elif isinstance(node, Call):
            emit(node.arg)
            push(OP_FUNC + BUILTIN_FUNCTIONS.index(node.func), 0, node.pos, 0)
        else:
            emit(node.left)
            emit(node.right)
            push(_BINOPS[node.op], 0, node.pos, -1)

    emit(e.root)
    arr = np.array(code, dtype=np.int64).reshape(-1, 3)
    arr.setflags(write=False)
    c = np.array(consts, dtype=np.float64)
    c.setflags(write=False)
    return Program(arr, c, tuple(varnames), max_depth)


def evaluate_many(e: Expression, bindings: Mapping[str, object], size: int) -> np.ndarray:
    """Evaluate ``e`` at ``size`` points; bindings are arrays or scalars (broadcast).

    Runs on the active kernel backend. Raises EvaluationError on the first
    failing point, with the offending node's source position.
    """
    from . import _backend

    names = tuple(sorted(bindings))
    prog = compile_program(e, names)
    cols = np.empty((max(len(names), 1), size))
    for k, name in enumerate(names):
        cols[k] = np.broadcast_to(np.asarray(bindings[name], dtype=float), (size,))
    out = np.empty(size)
    status, instr = _backend.active().eval_program(prog.code, prog.consts, cols, out)
    prog.raise_for(status, instr)
    return out
