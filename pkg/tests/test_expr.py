import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from belcal.errors import (
    DivisionByZero,
    EvaluationError,
    HistoryIndexOutOfRange,
    NonFiniteValue,
    NonPositiveVariance,
    TypeMismatch,
    UnboundReference,
)
from belcal.expr import (
    And,
    Binary,
    Cases,
    Compare,
    Const,
    Env,
    FluentRef,
    Gauss,
    Not,
    ParamRef,
    Sym,
    WorldPoint,
    eval_expr,
    eval_formula,
    gauss_density,
    point_env,
)

from .strategies import exprs

H, V = FluentRef("h"), FluentRef("v")
finite = st.floats(-1e6, 1e6, allow_nan=False)


def env(h=1.0, v=2.0, z=0.5):
    return point_env(WorldPoint(("h", "v"), (h, v)), {"z": z})


def test_arithmetic_and_cases():
    e = Binary("max", Const(0.0), Binary("-", H, Const(4.0)))
    assert eval_expr(e, env(h=3.0)) == 0.0
    assert eval_expr(e, env(h=6.5)) == 2.5
    c = Cases(((Compare("<=", H, Const(2.0)), Const(1.0)),), Const(7.0))
    assert eval_expr(c, env(h=2.0)) == 1.0
    assert eval_expr(c, env(h=2.5)) == 7.0


def test_collapse_to_exact_zero():
    e = Binary("max", Const(0.0), Binary("-", H, Const(4.0)))
    for h in (0.1, 1.0, 3.999999, 4.0):
        assert eval_expr(e, env(h=h)) == 0.0


def test_gauss_is_a_density():
    assert gauss_density(0.0, 0.0, 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert gauss_density(3.0, 1.0, 4.0) == pytest.approx(math.exp(-0.5) / math.sqrt(8 * math.pi))


@pytest.mark.parametrize(
    "e, err",
    [
        (Binary("/", H, Const(0.0)), DivisionByZero),
        (Gauss(H, Const(0.0), Const(0.0)), NonPositiveVariance),
        (Gauss(H, Const(0.0), Const(-1.0)), NonPositiveVariance),
        (Binary("*", Const(1e300), Const(1e300)), NonFiniteValue),
        (ParamRef("nope"), UnboundReference),
        (FluentRef("h", 3), HistoryIndexOutOfRange),
        (Binary("+", Const(Sym("a")), Const(1.0)), TypeMismatch),
    ],
)
def test_typed_errors(e, err):
    with pytest.raises(err):
        eval_expr(e, env())


def test_history_reference():
    w0 = WorldPoint(("h", "v"), (5.0, 0.0))
    w1 = WorldPoint(("h", "v"), (1.0, 0.0))
    e = Env((w0, w1), {}, None)
    assert eval_expr(FluentRef("h", 0), e) == 5.0
    assert eval_expr(H, e) == 1.0


def test_symbols_compare_by_identity():
    w = WorldPoint(("win",), (Sym("1"),))
    assert eval_formula(Compare("=", FluentRef("win"), Const(Sym("1"))), point_env(w))
    assert not eval_formula(Compare("=", FluentRef("win"), Const(Sym("0"))), point_env(w))
    with pytest.raises(TypeMismatch):
        eval_formula(Compare("<", FluentRef("win"), Const(Sym("0"))), point_env(w))
    with pytest.raises(TypeMismatch):
        eval_formula(Compare("=", FluentRef("win"), Const(1.0)), point_env(w))


def test_epsilon_equality():
    f = Compare("=", H, Const(1.0))
    w = WorldPoint(("h", "v"), (1.0 + 1e-9, 0.0))
    assert not eval_formula(f, point_env(w))
    assert eval_formula(f, point_env(w, eps=1e-6))


def test_connectives():
    t = Compare("<", H, Const(5.0))
    f = Compare(">", H, Const(5.0))
    assert eval_formula(And(t, Not(f)), env())
    assert not eval_formula(And(t, f), env())


@given(exprs, finite, finite, finite)
def test_determinism_and_totality(e, h, v, z):
    """Valid inputs give a finite value (the same every time) or a typed error."""
    try:
        a = eval_expr(e, env(h, v, z))
    except EvaluationError as err:
        with pytest.raises(type(err)):
            eval_expr(e, env(h, v, z))
        return
    b = eval_expr(e, env(h, v, z))
    assert math.isfinite(a)
    assert math.copysign(1.0, a) == math.copysign(1.0, b) and a == b


@given(finite, st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
def test_gauss_symmetry(x, mu, var):
    a = gauss_density(x, mu, var)
    b = gauss_density(2 * mu - x, mu, var)
    assert a >= 0.0
    assert a == pytest.approx(b, rel=1e-9, abs=1e-300)


@given(exprs, st.floats(-50, 50), finite, finite)
def test_guard_partition(value, c, h, v):
    """cases { x if G ; x if not G ; d } equals x wherever x evaluates."""
    g = Compare("<=", H, Const(c))
    e = Cases(((g, value), (Not(g), value)), Const(123.0))
    try:
        want = eval_expr(value, env(h, v))
    except EvaluationError:
        return
    assert eval_expr(e, env(h, v)) == want
