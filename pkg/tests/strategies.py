"""Random expression and formula trees over robot1d's fluents (h, v) and a parameter z."""

from hypothesis import strategies as st

from belcal.expr import And, Binary, BoolConst, Cases, Compare, Const, FluentRef, Gauss, Implies, Not, Or, ParamRef, Unary

consts = st.integers(-400, 400).map(lambda k: Const(k / 4))
leaves = st.one_of(
    consts,
    st.sampled_from([FluentRef("h"), FluentRef("v"), ParamRef("z")]),
)


def _extend(children):
    return st.one_of(
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/", "min", "max"]), children, children),
        # a negated literal re-parses as a negative literal, so only negate non-constants
        st.builds(lambda a: Unary("neg", a), children.filter(lambda e: not isinstance(e, Const))),
        st.builds(lambda a: Unary("abs", a), children),
        st.builds(Gauss, children, children, st.integers(1, 40).map(lambda k: Const(k / 4))),
        st.builds(lambda g, a, b: Cases(((g, a),), b), atoms(children), children, children),
    )


def atoms(exprs):
    return st.builds(Compare, st.sampled_from(["=", "!=", "<", "<=", ">", ">="]), exprs, exprs)


exprs = st.recursive(leaves, _extend, max_leaves=12)


def _fextend(children):
    return st.one_of(
        st.builds(And, children, children),
        st.builds(Or, children, children),
        st.builds(Not, children),
        st.builds(Implies, children, children),
    )


state_exprs = st.recursive(
    st.one_of(consts, st.sampled_from([FluentRef("h"), FluentRef("v")])), _extend, max_leaves=10
)
formulas = st.recursive(
    st.one_of(atoms(state_exprs), st.sampled_from([BoolConst(True), BoolConst(False)])), _fextend, max_leaves=8
)
