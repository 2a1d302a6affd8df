import pytest
from hypothesis import given
from hypothesis import strategies as st

from belcal import library
from belcal.dsl import (
    format_formula,
    format_query,
    format_theory,
    parse_formula,
    parse_ground_action,
    parse_query,
    parse_query_file,
    parse_theory,
    tokenize,
)
from belcal.errors import (
    ArityMismatch,
    DomainMismatch,
    DslSyntaxError,
    DuplicateName,
    StaticTypeError,
    TheoryError,
    UnknownIdentifier,
)
from belcal.expr import FiniteDomain, Sym
from belcal.theory import BEL, KNOWS, MARGINAL, NOISY, SENSING, GroundAction

from .strategies import formulas

SHIPPED = ["robot1d", "noisy", "sensewall", "window", "window_win"]


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_theories_parse(name):
    spec = parse_theory(library.theory_text(name))
    assert spec.name == name
    assert spec.fluents


@pytest.mark.parametrize("name", SHIPPED)
def test_round_trip(name):
    spec = library.theory(name)
    again = parse_theory(format_theory(spec))
    assert again == spec
    assert format_theory(again) == format_theory(spec)


def test_example_files_match_bundled():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "examples"
    for name in SHIPPED:
        assert parse_theory((root / f"{name}.bat").read_text()) == library.theory(name)


def test_action_kinds(robot, noisy, window):
    assert robot.action("sonar").kind == SENSING
    assert noisy.action("nmove").kind == NOISY
    setwin = window.action("setwin")
    assert [p.name for p in setwin.nominal_params] == ["x"]
    assert [p.name for p in setwin.actual_params] == ["y"]
    assert isinstance(window.fluent("win").domain, FiniteDomain)


def test_numerals_in_finite_domains_are_symbols(window):
    q = parse_query("bel (win = 1) after [setwin(0)]", window)
    assert q.alpha == (GroundAction("setwin", (Sym("0"),)),)
    assert q.formula.right.value == Sym("1")


def test_queries(robot):
    q = parse_query("bel (h <= 9) after [sonar(5), move(-4)] grid=501", robot)
    assert q.kind == BEL and len(q.alpha) == 2
    assert q.alpha[1].nominal_args == (-4.0,)
    assert q.options == {"grid": "501"}
    k = parse_query("knows (h@0 > 1) after [move(4)]", robot)
    assert k.kind == KNOWS
    m = parse_query("marginal h after [move(4)] bins=8 range=0,8", robot)
    assert (m.kind, m.fluent, m.bins, m.range) == (MARGINAL, "h", 8, (0.0, 8.0))
    assert parse_query(format_query(q), robot) == q
    assert parse_query(format_query(m), robot) == m


def test_actual_args(noisy):
    a = parse_ground_action(noisy, "nmove(-2 ~ -1.5)")
    assert a.nominal_args == (-2.0,) and a.actual_args == (-1.5,)


def test_query_file(robot):
    qs = parse_query_file("# comment\nbel (h <= 9) after []\n\nknows (h <= 9) after [] # trailing\n", robot)
    assert [q.kind for q in qs] == [BEL, KNOWS]


def test_bundled_queries_parse():
    for name in ("robot1d", "noisy", "sensewall", "window"):
        assert library.queries(name)


@pytest.mark.parametrize(
    "text, err",
    [
        ("theory t\nfluent h : real\n", DslSyntaxError),
        ("theory t\nfluent h : real\nfluent h : real\ninit p = 1\n", DuplicateName),
        ("theory t\nfluent h : real\ninit p = k\n", UnknownIdentifier),
        ("theory t\nfluent h : real\ninit p = gauss(h; 0)\n", DslSyntaxError),
        ("theory t\nfluent h : real\ninit p = 1\naction a(x: real) { q' = x }\n", UnknownIdentifier),
        ("theory t\nfluent w : {a, b}\ninit p = 1\naction a(x: real) { w' = x }\n", StaticTypeError),
        ("theory t\nfluent h : real\ninit p = cases { 1 if h ; 0 }\n", DslSyntaxError),
    ],
)
def test_errors(text, err):
    with pytest.raises(err):
        parse_theory(text)


def test_diagnostic_spans_point_into_text():
    text = "theory t\nfluent h : real\ninit p = 1\naction a(x: real) {\n  h' = y + 1\n}\n"
    with pytest.raises(TheoryError) as ei:
        parse_theory(text)
    lines = text.splitlines()
    for d in ei.value.diagnostics:
        assert 1 <= d.span.line <= len(lines)
        assert 1 <= d.span.col <= len(lines[d.span.line - 1]) + 1
    assert ei.value.diagnostics[0].span.line == 5


def test_several_errors_reported_together():
    text = "theory t\nfluent h : real\ninit p = k\naction a() { h' = y }\n"
    with pytest.raises(TheoryError) as ei:
        parse_theory(text)
    assert len(ei.value.diagnostics) == 2


def test_ground_action_errors(robot, window):
    with pytest.raises(ArityMismatch):
        parse_ground_action(robot, "move(1, 2)")
    with pytest.raises(UnknownIdentifier):
        parse_ground_action(robot, "jump(1)")
    with pytest.raises(DomainMismatch):
        parse_ground_action(window, "setwin(2)")


def test_tokenize_positions():
    toks = tokenize("h' = max(0,\n h - x)")
    assert toks[0].text == "h" and toks[0].span.line == 1
    assert any(t.span.line == 2 for t in toks)


@given(formulas)
def test_formula_round_trip(f):
    robot = library.theory("robot1d")
    assert parse_formula(robot, format_formula(f)) == f


@given(st.lists(st.integers(-8, 8), max_size=4))
def test_action_list_round_trip(xs):
    robot = library.theory("robot1d")
    alpha = ", ".join(f"move({x})" for x in xs)
    q = parse_query(f"bel (h <= 9) after [{alpha}]", robot)
    assert parse_query(format_query(q), robot) == q
