import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from belcal import kernels
from belcal.errors import DivisionByZero, EvaluationError, NonPositiveVariance
from belcal.expr import Binary, Const, FluentRef, Gauss, WorldPoint, eval_expr, eval_formula, point_env

from .strategies import exprs, formulas

KERNELS = list(kernels.AVAILABLE)
needs_compiled = pytest.mark.skipif("compiled" not in kernels.AVAILABLE, reason="extension not built")


def _bind(n):
    return ("col", n.name)


def _compile(node):
    return kernels.compile_node(node, _bind, lambda n: False)


def _columns(prog, data):
    return [data[k] for k in prog.inputs]


def _scalar(node, h, v, z, formula=False):
    env = point_env(WorldPoint(("h", "v"), (h, v)), {"z": z})
    try:
        return float(eval_formula(node, env)) if formula else eval_expr(node, env)
    except EvaluationError:
        return None


rows = st.lists(st.tuples(*[st.floats(-20, 20, allow_nan=False)] * 3), min_size=1, max_size=12)


def _check(node, pts, formula):
    data = {k: np.array([p[i] for p in pts]) for i, k in enumerate("hvz")}
    prog = _compile(node)
    want = [_scalar(node, *p, formula=formula) for p in pts]
    for kernel in KERNELS:
        if any(w is None for w in want):
            with pytest.raises(EvaluationError):
                kernels.evaluate(prog, _columns(prog, data), len(pts), kernel=kernel)
            continue
        got = kernels.evaluate(prog, _columns(prog, data), len(pts), kernel=kernel)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=0)


@given(exprs, rows)
def test_expressions_match_scalar_evaluator(e, pts):
    _check(e, pts, formula=False)


@given(formulas, rows)
def test_formulas_match_scalar_evaluator(f, pts):
    _check(f, pts, formula=True)


@pytest.mark.parametrize("kernel", KERNELS)
def test_error_row_is_reported(kernel):
    prog = _compile(Binary("/", Const(1.0), FluentRef("h")))
    with pytest.raises(DivisionByZero) as ei:
        kernels.evaluate(prog, [np.array([1.0, 2.0, 0.0, 4.0])], kernel=kernel)
    assert ei.value.row == 2
    prog = _compile(Gauss(FluentRef("h"), Const(0.0), FluentRef("v")))
    with pytest.raises(NonPositiveVariance):
        kernels.evaluate(prog, _columns(prog, {"h": np.zeros(3), "v": np.array([1.0, -1.0, 1.0])}), kernel=kernel)


def test_constant_folding():
    prog = _compile(Binary("+", Const(1.0), Binary("*", Const(2.0), Const(3.0))))
    assert prog.is_constant
    assert kernels.evaluate(prog, [], 4).tolist() == [7.0] * 4


@needs_compiled
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=200), st.data())
def test_weighted_sums_agree(w, data):
    ind = data.draw(st.lists(st.sampled_from([0.0, 1.0]), min_size=len(w), max_size=len(w)))
    a = kernels.weighted_sums(np.array(w), np.array(ind), kernel="compiled")
    b = kernels.weighted_sums(np.array(w), np.array(ind), kernel="python")
    for x, y in zip(a, b):
        assert x == pytest.approx(y, rel=1e-12, abs=1e-300)


def test_weighted_sums_are_exactly_rounded():
    w = np.array([1e16, 1.0, -1e16, 1.0])
    ind = np.ones(4)
    for kernel in KERNELS:
        assert kernels.weighted_sums(w, ind, kernel=kernel)[0] == 2.0


@needs_compiled
def test_deep_programs_fall_back():
    e = FluentRef("h")
    for _ in range(300):
        e = Binary("+", Const(1.0), e)
    prog = _compile(e)
    assert prog.stack_size > 256
    out = kernels.evaluate(prog, [np.array([0.5])], kernel="compiled")
    assert math.isclose(out[0], 300.5)
