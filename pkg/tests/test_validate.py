import pytest

from belcal import library
from belcal.dsl import parse_theory
from belcal.validate import errors_only, validate


@pytest.mark.parametrize("name", library.THEORIES)
def test_shipped_theories_are_clean(name):
    assert validate(library.theory(name)) == []


def codes(text):
    return [d.code for d in validate(parse_theory(text))]


HEAD = "theory t\nfluent h : real\nfluent w : {a, b}\ninit p = cases { 0.5 if 0 <= h and h <= 1 ; 0 }\n"


def test_sensing_must_not_mutate():
    assert "SensingMutation" in codes(HEAD + "action s(z: real) sensing { h' = z }\n")


def test_noisy_likelihood_must_mention_outcome():
    assert "NoisyLikelihood" in codes(HEAD + "action n(x: real ~ y: real) { likelihood = gauss(x; 0, 1)\n h' = y }\n")


def test_noisy_effects_use_outcome():
    assert "NominalInEffect" in codes(HEAD + "action n(x: real ~ y: real) { likelihood = gauss(y - x; 0, 1)\n h' = x }\n")


def test_finite_effects_stay_in_domain():
    spec = "theory t\nfluent h : real\nfluent k : {0, 1, 2}\ninit p = cases { 0.5 if 0 <= h and h <= 1 ; 0 }\n"
    assert codes(spec + "action set(x: {0, 1, 2}) { k' = x }\n") == []
    bad = "theory t\nfluent k : {a, b}\nfluent j : {a, b, c}\ninit p = 1\naction cp() { k' = j }\n"
    assert "DomainViolation" in codes(bad)


def test_likelihood_checks():
    assert "NonPositiveVariance" in codes(HEAD + "action s(z: real) sensing { likelihood = gauss(z; h, h - 5) }\n")
    assert "NegativeLikelihood" in codes(HEAD + "action s(z: real) sensing { likelihood = z - h }\n")


def test_negative_init():
    assert "NegativeLikelihood" in codes("theory t\nfluent h : real\ninit p = cases { h - 2 if 0 <= h and h <= 4 ; 0 }\n")


def test_grid_only_is_a_warning():
    diags = validate(parse_theory("theory t\nfluent h : real\ninit p = cases { h if 0 <= h and h <= 4 ; 0 }\n"))
    assert [d.code for d in diags] == ["GridOnly"]
    assert errors_only(diags) == []


def test_spans_point_at_the_problem():
    text = HEAD + "action s(z: real) sensing {\n  likelihood = 1\n  h' = z\n}\n"
    [d] = validate(parse_theory(text))
    assert d.span.line == 7
