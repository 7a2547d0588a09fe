"""Pure numpy implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` operation for operation: both walk the same postfix
program, apply the same domain checks, and accumulate trapezoid sums in
ascending index order, so results agree to libm rounding.
"""

import numpy as np

from .expr import (OP_ADD, OP_CONST, OP_DIV, OP_FUNC, OP_MUL, OP_NEG, OP_POW,
                   OP_SUB, OP_VAR)

NAME = "python"

_UNARY = {
    OP_FUNC + 0: np.sin,
    OP_FUNC + 1: np.cos,
    OP_FUNC + 2: np.tan,
    OP_FUNC + 3: np.exp,
    OP_FUNC + 4: np.log,
    OP_FUNC + 5: np.sqrt,
    OP_FUNC + 6: np.abs,
    OP_FUNC + 7: np.sinh,
    OP_FUNC + 8: np.cosh,
}


def eval_program(code, consts, cols, out):
    """Evaluate the program at every column of ``cols`` (shape nvars x M).

    Writes into ``out`` and returns ``(status, instr)``; status 0 means success.
    """
    m = cols.shape[1]
    stack = []
    with np.errstate(all="ignore"):
        for k in range(code.shape[0]):
            op = code[k, 0]
            if op == OP_CONST:
                stack.append(np.full(m, consts[code[k, 1]]))
                continue
            if op == OP_VAR:
                stack.append(cols[code[k, 1]])
                continue
            if op == OP_NEG:
                stack.append(-stack.pop())
                continue
            if op >= OP_FUNC:
                x = stack.pop()
                if op == OP_FUNC + 4 and np.any(x <= 0.0):
                    return 2, k
                if op == OP_FUNC + 5 and np.any(x < 0.0):
                    return 3, k
                r = _UNARY[op](x)
            else:
                b = stack.pop()
                a = stack.pop()
                if op == OP_ADD:
                    r = a + b
                elif op == OP_SUB:
                    r = a - b
                elif op == OP_MUL:
                    r = a * b
                elif op == OP_DIV:
                    if np.any(b == 0.0):
                        return 1, k
                    r = a / b
                else:
                    if np.any((a == 0.0) & (b < 0.0)):
                        return 1, k
                    if np.any((a < 0.0) & (b != np.floor(b))):
                        return 4, k
                    r = np.power(a, b)
            if not np.all(np.isfinite(r)):
                return 5, k
            stack.append(r)
    out[:] = stack.pop()
    return 0, 0


def volterra_rows(code, consts, t, w, wp, h, out):
    """out[i] = trapezoid over m = 0..i of G(t_i, t_m, w_m, wp_m)."""
    n1 = t.shape[0]
    rows, cols = np.tril_indices(n1)
    keep = rows > 0
    rows, cols = rows[keep], cols[keep]
    args = np.vstack([t[rows], t[cols], w[cols], wp[cols]])
    vals = np.empty(rows.shape[0])
    status, instr = eval_program(code, consts, args, vals)
    if status:
        return status, instr
    weights = np.where((cols == 0) | (cols == rows), 0.5, 1.0)
    mat = np.zeros((n1, n1))
    mat[rows, cols] = weights * vals
    # cumsum accumulates left to right, matching the compiled loop's order
    acc = np.cumsum(mat, axis=1)[:, -1]
    out[:] = h * acc
    out[0] = 0.0
    return 0, 0
