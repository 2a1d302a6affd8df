"""Pure numpy evaluation of column programs.

Each subtree is evaluated only on the rows that reach it, so a ``cases``
branch or the right side of ``and`` never raises on rows its guard excludes.
"""

from __future__ import annotations

import math

import numpy as np

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class _KernelError(Exception):
    def __init__(self, code: int, row: int):
        self.code = code
        self.row = row


def run(prog, cols: np.ndarray, n: int, eps: float, out: np.ndarray) -> tuple[int, int]:
    """Same contract as the compiled kernel: fill ``out[:n]``, return ``(code, row)``."""
    rows = np.arange(n)
    try:
        val = _ev(prog.ir, cols, rows, eps)
    except _KernelError as e:
        return e.code, e.row
    out[:n] = val
    return 0, -1


def _check(v: np.ndarray, rows: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(v)
    if bad.any():
        raise _KernelError(3, int(rows[np.argmax(bad)]))
    return v


def _ev(ir, cols, rows: np.ndarray, eps: float) -> np.ndarray:
    tag = ir[0]
    if tag == "col":
        return cols[ir[1]][rows]
    if tag in ("const", "bool"):
        return np.full(rows.shape[0], float(ir[1]))
    if tag == "neg":
        return -_ev(ir[1], cols, rows, eps)
    if tag == "abs":
        return np.abs(_ev(ir[1], cols, rows, eps))
    if tag == "not":
        return (_ev(ir[1], cols, rows, eps) == 0.0).astype(np.float64)
    if tag in ("and", "or"):
        out = _ev(ir[1], cols, rows, eps) != 0.0
        todo = out if tag == "and" else ~out
        if todo.any():
            out[todo] = _ev(ir[2], cols, rows[todo], eps) != 0.0
        return out.astype(np.float64)
    if tag == "cases":
        out = np.empty(rows.shape[0])
        left = np.ones(rows.shape[0], dtype=bool)
        for g, v in ir[1]:
            idx = np.flatnonzero(left)
            if idx.size == 0:
                return out
            hit = _ev(g, cols, rows[idx], eps) != 0.0
            take = idx[hit]
            if take.size:
                out[take] = _ev(v, cols, rows[take], eps)
                left[take] = False
        idx = np.flatnonzero(left)
        if idx.size:
            out[idx] = _ev(ir[2], cols, rows[idx], eps)
        return out
    if tag == "cmp":
        _, op, a, b, sym = ir
        x = _ev(a, cols, rows, eps)
        y = _ev(b, cols, rows, eps)
        if op in ("=", "!="):
            eq = x == y
            if not sym and eps > 0.0:
                eq |= np.abs(x - y) <= eps
            r = eq if op == "=" else ~eq
        else:
            r = {"<": np.less, "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal}[op](x, y)
        return r.astype(np.float64)
    if tag == "gauss":
        x = _ev(ir[1], cols, rows, eps)
        m = _ev(ir[2], cols, rows, eps)
        v = _ev(ir[3], cols, rows, eps)
        bad = ~(v > 0.0)
        if bad.any():
            raise _KernelError(2, int(rows[np.argmax(bad)]))
        d = x - m
        with np.errstate(all="ignore"):
            r = np.exp(-(d * d) / (2.0 * v)) / (_SQRT_2PI * np.sqrt(v))
        return _check(r, rows)
    a = _ev(ir[1], cols, rows, eps)
    b = _ev(ir[2], cols, rows, eps)
    with np.errstate(all="ignore"):
        if tag == "+":
            r = a + b
        elif tag == "-":
            r = a - b
        elif tag == "*":
            r = a * b
        elif tag == "/":
            zero = b == 0.0
            if zero.any():
                raise _KernelError(1, int(rows[np.argmax(zero)]))
            r = a / b
        elif tag == "min":
            r = np.minimum(a, b)
        elif tag == "max":
            r = np.maximum(a, b)
        else:
            raise ValueError(f"unknown IR tag {tag!r}")
    return _check(r, rows)


def weighted_sums(w: np.ndarray, ind: np.ndarray) -> tuple[float, float, float, float]:
    w2 = w * w
    return (
        math.fsum(w),
        math.fsum(w * ind),
        math.fsum(w2),
        math.fsum(w2 * ind),
    )
