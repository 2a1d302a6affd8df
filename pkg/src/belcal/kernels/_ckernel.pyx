# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bytecode interpreter for column programs."""

from libc.math cimport exp, sqrt, fabs, isfinite

# opcodes; keep in sync with program.py
cdef enum:
    LOAD = 0
    CONST = 1
    NEG = 2
    ABS = 3
    ADD = 4
    SUB = 5
    MUL = 6
    DIV = 7
    MIN = 8
    MAX = 9
    GAUSS = 10
    EQ = 11
    NE = 12
    LT = 13
    LE = 14
    GT = 15
    GE = 16
    EQS = 17
    NES = 18
    NOT = 19
    JIF = 20
    JMP = 21
    JFOP = 22
    JTOP = 23
    MAXSTACK = 256


cdef double SQRT_2PI = 2.5066282746310002


cdef inline bint _eq(double a, double b, double eps) nogil:
    return a == b or fabs(a - b) <= eps


def run(const int[::1] ops, const int[::1] args, const double[::1] consts,
        const double[:, ::1] cols, Py_ssize_t n, double eps, double[::1] out):
    """Evaluate the program at rows ``0..n-1``. Returns ``(code, row)``; code 0 means ok."""
    cdef double stack[MAXSTACK]
    cdef Py_ssize_t i, sp, pc
    cdef Py_ssize_t nops = ops.shape[0]
    cdef int op, err = 0
    cdef Py_ssize_t bad = -1
    cdef double a, b, v
    with nogil:
        for i in range(n):
            sp = -1
            pc = 0
            while pc < nops:
                op = ops[pc]
                if op == LOAD:
                    sp += 1
                    stack[sp] = cols[args[pc], i]
                elif op == CONST:
                    sp += 1
                    stack[sp] = consts[args[pc]]
                elif op == NEG:
                    stack[sp] = -stack[sp]
                elif op == ABS:
                    stack[sp] = fabs(stack[sp])
                elif op == NOT:
                    stack[sp] = 0.0 if stack[sp] != 0.0 else 1.0
                elif op == JIF:
                    sp -= 1
                    if stack[sp + 1] == 0.0:
                        pc = args[pc]
                    else:
                        pc += 1
                    continue
                elif op == JMP:
                    pc = args[pc]
                    continue
                elif op == JFOP:
                    if stack[sp] == 0.0:
                        pc = args[pc]
                    else:
                        sp -= 1
                        pc += 1
                    continue
                elif op == JTOP:
                    if stack[sp] != 0.0:
                        pc = args[pc]
                    else:
                        sp -= 1
                        pc += 1
                    continue
                elif op == GAUSS:
                    v = stack[sp]
                    sp -= 2
                    if not v > 0.0:
                        err = 2
                        break
                    a = stack[sp] - stack[sp + 1]
                    stack[sp] = exp(-(a * a) / (2.0 * v)) / (SQRT_2PI * sqrt(v))
                else:
                    b = stack[sp]
                    sp -= 1
                    a = stack[sp]
                    if op == ADD:
                        v = a + b
                    elif op == SUB:
                        v = a - b
                    elif op == MUL:
                        v = a * b
                    elif op == DIV:
                        if b == 0.0:
                            err = 1
                            break
                        v = a / b
                    elif op == MIN:
                        v = a if a <= b else b
                    elif op == MAX:
                        v = a if a >= b else b
                    elif op == EQ:
                        v = 1.0 if _eq(a, b, eps) else 0.0
                    elif op == NE:
                        v = 0.0 if _eq(a, b, eps) else 1.0
                    elif op == LT:
                        v = 1.0 if a < b else 0.0
                    elif op == LE:
                        v = 1.0 if a <= b else 0.0
                    elif op == GT:
                        v = 1.0 if a > b else 0.0
                    elif op == GE:
                        v = 1.0 if a >= b else 0.0
                    elif op == EQS:
                        v = 1.0 if a == b else 0.0
                    else:
                        v = 0.0 if a == b else 1.0
                    stack[sp] = v
                if not isfinite(stack[sp]):
                    err = 3
                    break
                pc += 1
            if err:
                bad = i
                break
            out[i] = stack[0]
    return err, bad


def weighted_sums(const double[::1] w, const double[::1] ind):
    """Compensated sums of w, w*ind, w**2 and w**2*ind, in row order."""
    cdef Py_ssize_t i, n = w.shape[0]
    cdef double s[4]
    cdef double c[4]
    cdef double x[4]
    cdef double t, wi
    cdef int k
    for k in range(4):
        s[k] = 0.0
        c[k] = 0.0
    with nogil:
        for i in range(n):
            wi = w[i]
            x[0] = wi
            x[1] = wi * ind[i]
            x[2] = wi * wi
            x[3] = x[2] * ind[i]
            for k in range(4):
                t = s[k] + x[k]
                if fabs(s[k]) >= fabs(x[k]):
                    c[k] += (s[k] - t) + x[k]
                else:
                    c[k] += (x[k] - t) + s[k]
                s[k] = t
    return (s[0] + c[0], s[1] + c[1], s[2] + c[2], s[3] + c[3])
