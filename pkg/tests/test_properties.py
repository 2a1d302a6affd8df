"""The engine properties, driven by hypothesis through the shared case generators."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from belcal import library
from belcal.dsl import parse_query
from belcal.engine import EngineConfig, bel
from belcal.properties import PROPERTIES, run_property


class HypothesisChooser:
    def __init__(self, data):
        self.data = data

    def uniform(self, lo, hi):
        return self.data.draw(st.floats(lo, hi))

    def integers(self, lo, hi):
        return self.data.draw(st.integers(lo, hi))

    def choice(self, seq):
        return self.data.draw(st.sampled_from(list(seq)))


def _property_test(prop):
    @settings(max_examples=100)
    @given(st.data())
    def test(data):
        case = prop.generate(HypothesisChooser(data))
        msg = prop.check(case)
        assert msg is None, f"{case}: {msg}"

    return test


test_complementarity, test_backend_agreement, test_seed_determinism, test_actual_argument_irrelevance, \
    test_frame_invariance = (_property_test(p) for p in PROPERTIES)


def test_property_names():
    assert [p.name for p in PROPERTIES] == [
        "complementarity", "backend agreement", "seed determinism", "actual-argument irrelevance",
        "frame invariance",
    ]


def test_seeded_runner_reports_failures():
    from belcal.properties import Property

    rep = run_property(Property("always fails", PROPERTIES[0].generate, lambda case: "nope"), n=3)
    assert not rep.ok and len(rep.failures) == 3


@pytest.mark.parametrize("name", ["robot1d", "noisy", "sensewall", "window"])
def test_range_on_shipped_queries(name):
    spec = library.theory(name)
    for q in library.queries(name):
        if q.kind == "bel":
            assert 0.0 <= bel(spec, q, EngineConfig(quad_points_per_dim=401)).value <= 1.0


def test_sensing_monotonicity_on_worked_case(robot):
    cfg = EngineConfig()
    xs = [bel(robot, parse_query(f"bel (h <= 9) after [{a}]", robot), cfg).value
          for a in ("", "sonar(5)", "sonar(5), sonar(5)")]
    assert xs[0] < xs[1] < xs[2]


def test_null_set_shrinks_with_grid(robot):
    q = parse_query("bel (h = 3 or h = 4 or h = 7) after []", robot)
    assert bel(robot, q, EngineConfig()).value <= 2e-3
    assert bel(robot, q, EngineConfig(quad_points_per_dim=20001)).value <= 2e-4
