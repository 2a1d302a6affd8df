"""Vectorized evaluation of compiled programs.

The compiled interpreter is used when the extension is built; otherwise the
numpy evaluator.  ``BELCAL_KERNEL=python`` forces the fallback.
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

from ..errors import DivisionByZero, EvaluationError, NonFiniteValue, NonPositiveVariance
from . import _pykernel
from .program import ERR_DIV0, ERR_NONFINITE, ERR_VAR, Program, compile_node, scalar_eval

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

_MAX_STACK = 256
AVAILABLE = ("python",) + (("compiled",) if _ckernel is not None else ())
ACTIVE = "python" if os.environ.get("BELCAL_KERNEL", "").lower() == "python" or _ckernel is None else "compiled"

_ERRORS = {
    ERR_DIV0: (DivisionByZero, "division by zero"),
    ERR_VAR: (NonPositiveVariance, "gauss variance must be positive"),
    ERR_NONFINITE: (NonFiniteValue, "non-finite intermediate value"),
}


def evaluate(prog: Program, cols: Sequence[np.ndarray] | np.ndarray, n: int | None = None,
             eps: float = 0.0, kernel: str | None = None) -> np.ndarray:
    """Evaluate ``prog`` row-wise. ``cols[i]`` holds the values of ``prog.inputs[i]``."""
    kernel = kernel or ACTIVE
    if n is None:
        n = len(cols[0]) if len(cols) else 1
    if prog.is_constant:
        return np.full(n, float(prog.ir[1]))
    X = np.ascontiguousarray(np.asarray(cols, dtype=np.float64).reshape(len(prog.inputs), n))
    out = np.empty(n)
    if kernel == "compiled" and _ckernel is not None and prog.stack_size <= _MAX_STACK:
        code, row = _ckernel.run(prog.ops, prog.args, prog.consts, X, n, float(eps), out)
    elif kernel in ("compiled", "python"):
        code, row = _pykernel.run(prog, X, n, float(eps), out)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    if code:
        cls, msg = _ERRORS[code]
        err = cls(msg)
        err.row = row
        raise err
    return out


def weighted_sums(w: np.ndarray, ind: np.ndarray, kernel: str | None = None) -> tuple[float, float, float, float]:
    """``(sum w, sum w*ind, sum w^2, sum w^2*ind)`` with a fixed summation order."""
    kernel = kernel or ACTIVE
    w = np.ascontiguousarray(w, dtype=np.float64)
    ind = np.ascontiguousarray(ind, dtype=np.float64)
    if kernel == "compiled" and _ckernel is not None:
        return _ckernel.weighted_sums(w, ind)
    return _pykernel.weighted_sums(w, ind)


__all__ = [
    "ACTIVE",
    "AVAILABLE",
    "EvaluationError",
    "Program",
    "compile_node",
    "evaluate",
    "scalar_eval",
    "weighted_sums",
]
