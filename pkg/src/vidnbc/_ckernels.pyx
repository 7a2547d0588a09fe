# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: postfix expression evaluation and the nested Volterra sum.

Same contract as ``_pykernels``. Opcodes are duplicated here as C constants and
must match ``vidnbc.expr``.
"""

from libc.math cimport sin, cos, tan, exp, log, sqrt, fabs, sinh, cosh, pow, floor, isfinite
from libc.stdlib cimport malloc, free

NAME = "compiled"

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_NEG = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_POW = 7
    OP_FUNC = 10


cdef inline int run(const long long[:, ::1] code, const double[::1] consts,
                    const double* vars, double* stack, double* result,
                    Py_ssize_t* bad) noexcept nogil:
    cdef Py_ssize_t k, sp = 0
    cdef long long op
    cdef double a, b, r
    for k in range(code.shape[0]):
        op = code[k, 0]
        if op == OP_CONST:
            stack[sp] = consts[code[k, 1]]
            sp += 1
            continue
        if op == OP_VAR:
            stack[sp] = vars[code[k, 1]]
            sp += 1
            continue
        if op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
            continue
        if op >= OP_FUNC:
            a = stack[sp - 1]
            op -= OP_FUNC
            if op == 0:
                r = sin(a)
            elif op == 1:
                r = cos(a)
            elif op == 2:
                r = tan(a)
            elif op == 3:
                r = exp(a)
            elif op == 4:
                if a <= 0.0:
                    bad[0] = k
                    return 2
                r = log(a)
            elif op == 5:
                if a < 0.0:
                    bad[0] = k
                    return 3
                r = sqrt(a)
            elif op == 6:
                r = fabs(a)
            elif op == 7:
                r = sinh(a)
            else:
                r = cosh(a)
            if not isfinite(r):
                bad[0] = k
                return 5
            stack[sp - 1] = r
            continue
        b = stack[sp - 1]
        a = stack[sp - 2]
        sp -= 1
        if op == OP_ADD:
            r = a + b
        elif op == OP_SUB:
            r = a - b
        elif op == OP_MUL:
            r = a * b
        elif op == OP_DIV:
            if b == 0.0:
                bad[0] = k
                return 1
            r = a / b
        else:
            if a == 0.0 and b < 0.0:
                bad[0] = k
                return 1
            if a < 0.0 and b != floor(b):
                bad[0] = k
                return 4
            r = pow(a, b)
        if not isfinite(r):
            bad[0] = k
            return 5
        stack[sp - 1] = r
    result[0] = stack[0]
    return 0


def eval_program(const long long[:, ::1] code, const double[::1] consts,
                 const double[:, ::1] cols, double[::1] out):
    """Evaluate the program at every column of ``cols``; returns (status, instr)."""
    cdef Py_ssize_t nv = cols.shape[0], m = cols.shape[1], j, v
    cdef Py_ssize_t bad = 0
    cdef int status = 0
    cdef double vars[16]
    cdef double* stack = <double*> malloc((code.shape[0] + 1) * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    if nv > 16:
        free(stack)
        raise ValueError("too many variables")
    try:
        with nogil:
            for j in range(m):
                for v in range(nv):
                    vars[v] = cols[v, j]
                status = run(code, consts, vars, stack, &out[j], &bad)
                if status:
                    break
    finally:
        free(stack)
    return status, bad


def volterra_rows(const long long[:, ::1] code, const double[::1] consts,
                  const double[::1] t, const double[::1] w, const double[::1] wp,
                  double h, double[::1] out):
    """out[i] = trapezoid over m = 0..i of G(t_i, t_m, w_m, wp_m), ascending order."""
    cdef Py_ssize_t n1 = t.shape[0], i, m
    cdef Py_ssize_t bad = 0
    cdef int status = 0
    cdef double vars[4]
    cdef double val, acc
    cdef double* stack = <double*> malloc((code.shape[0] + 1) * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            out[0] = 0.0
            for i in range(1, n1):
                vars[0] = t[i]
                acc = 0.0
                for m in range(i + 1):
                    vars[1] = t[m]
                    vars[2] = w[m]
                    vars[3] = wp[m]
                    status = run(code, consts, vars, stack, &val, &bad)
                    if status:
                        break
                    if m == 0 or m == i:
                        acc = acc + 0.5 * val
                    else:
                        acc = acc + 1.0 * val
                if status:
                    break
                out[i] = h * acc
    finally:
        free(stack)
    return status, bad
