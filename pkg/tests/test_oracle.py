from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from belcal import library
from belcal.dsl import parse_formula, parse_query, parse_theory
from belcal.engine import EngineConfig, bel
from belcal.errors import DegenerateBelief, InfiniteDomain, ZeroEvidence
from belcal.expr import TRUE, Sym
from belcal.oracle import ErrFn, PriorGrid, bayes_posterior, enumerate_bel


@pytest.fixture(scope="module")
def robot_prior(robot):
    return PriorGrid.from_spec(robot, {"h": (2.0, 12.0, 1000)}, {"v": (-32.0, 32.0, 64)})


def test_prior_mass_is_one(robot_prior):
    assert sum(m for _, m in robot_prior.nodes) == pytest.approx(1.0, abs=1e-9)


def test_sonar_posterior(robot, robot_prior):
    err = ErrFn.from_action(robot, "sonar")
    phi = parse_formula(robot, "h <= 9")
    one = bayes_posterior(robot_prior, err, 5.0, phi)
    two = bayes_posterior(robot_prior, err, [5.0, 5.0], phi)
    assert 0.7 < one < two < 1.0
    assert one == pytest.approx(0.9759, abs=1e-3)


@given(st.floats(0, 12))
def test_true_has_posterior_one(z):
    robot = library.theory("robot1d")
    prior = PriorGrid.from_spec(robot, {"h": (2.0, 12.0, 50)}, {"v": (-32.0, 32.0, 4)})
    assert bayes_posterior(prior, ErrFn.from_action(robot, "sonar"), z, TRUE) == pytest.approx(1.0, abs=1e-12)


def test_zero_evidence(robot, robot_prior):
    with pytest.raises(ZeroEvidence):
        bayes_posterior(robot_prior, ErrFn.from_action(robot, "sonar"), -1.0, TRUE)


def test_sensewall_posterior(sensewall):
    prior = PriorGrid.from_spec(sensewall, {"h": (2.0, 12.0, 1000)})
    err = ErrFn.from_action(sensewall, "sensewall")
    assert bayes_posterior(prior, err, Sym("close"), parse_formula(sensewall, "h <= 4")) == pytest.approx(3 / 11, abs=1e-9)


def test_prior_grid_requires_every_real_fluent(robot):
    with pytest.raises(ValueError):
        PriorGrid.from_spec(robot, {"h": (2.0, 12.0, 10)})


@pytest.mark.parametrize(
    "alpha, want",
    [("[]", Fraction(2, 5)), ("[move(1)]", Fraction(2, 5)), ("[setwin(0)]", Fraction(3, 4)),
     ("[setwin(0), seewin(0)]", Fraction(7, 8)), ("[seewin(1)]", Fraction(4, 28))],
)
def test_enumeration_is_exact(window_win, alpha, want):
    assert enumerate_bel(window_win, parse_query(f"bel (win = 0) after {alpha}", window_win)) == want


def test_enumeration_matches_engine(window_win):
    cfg = EngineConfig()
    for alpha in ("[]", "[seewin(1), setwin(1)]", "[setwin(0), seewin(1), seewin(0)]"):
        q = parse_query(f"bel (win = 1) after {alpha}", window_win)
        assert bel(window_win, q, cfg).value == pytest.approx(float(enumerate_bel(window_win, q)), abs=1e-12)


def test_enumeration_refuses_real_fluents(robot):
    with pytest.raises(InfiniteDomain):
        enumerate_bel(robot, parse_query("bel (h <= 9) after []", robot))


def test_enumeration_degenerate():
    spec = parse_theory("theory z\nfluent c : {a, b}\ninit p = 0\n")
    with pytest.raises(DegenerateBelief):
        enumerate_bel(spec, parse_formula(spec, "c = a"))
