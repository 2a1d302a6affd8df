import pytest
from hypothesis import given
from hypothesis import strategies as st

from belcal import library
from belcal.dsl import parse_ground_action, parse_theory
from belcal.dynamics import ground_alt, likelihood, poss, progress, simulate, world_point
from belcal.errors import ArityMismatch, DomainMismatch, SimulationError
from belcal.expr import Sym
from belcal.theory import GroundAction

reals = st.floats(-50, 50, allow_nan=False)


def test_move_and_up(robot):
    w = world_point(robot, {"h": 6.0, "v": 1.0})
    w = progress(robot, w, parse_ground_action(robot, "move(4)"))
    assert (w["h"], w["v"]) == (2.0, 1.0)
    w = progress(robot, w, parse_ground_action(robot, "up(2.5)"))
    assert (w["h"], w["v"]) == (2.0, 3.5)


@given(st.floats(-10, 4))
def test_collapse_is_exact(x):
    robot = library.theory("robot1d")
    traj = simulate(robot, world_point(robot, {"h": x, "v": 0.0}), [GroundAction("move", (4.0,))])
    assert traj.final["h"] == 0.0


@given(reals, reals, st.floats(0, 12))
def test_sensing_neutrality(h, v, z):
    robot = library.theory("robot1d")
    w = world_point(robot, {"h": h, "v": v})
    assert progress(robot, w, GroundAction("sonar", (z,))) == w


@pytest.mark.parametrize("name", ["robot1d", "noisy", "sensewall", "window"])
def test_frame_invariance(name):
    spec = library.theory(name)

    @given(st.data())
    def check(data):
        vals = {
            f.name: data.draw(reals) if f.is_real else data.draw(st.sampled_from(f.domain.values))
            for f in spec.fluents
        }
        w = world_point(spec, vals)
        decl = data.draw(st.sampled_from(spec.actions))
        def arg(p):
            return data.draw(reals) if p.is_real else data.draw(st.sampled_from(p.domain.values))
        a = GroundAction(decl.name, tuple(arg(p) for p in decl.nominal_params),
                         tuple(arg(p) for p in decl.actual_params))
        w2 = progress(spec, w, a)
        for f in spec.fluent_names:
            if f not in decl.ssa:
                assert w2[f] == w[f]

    check()


def test_simultaneous_update():
    spec = parse_theory(
        "theory swap\nfluent a : real\nfluent b : real\ninit p = 1\naction swap() { a' = b\n b' = a }\n"
    )
    w = world_point(spec, {"a": 1.0, "b": 2.0})
    w2 = progress(spec, w, GroundAction("swap"))
    assert (w2["a"], w2["b"]) == (2.0, 1.0)


def test_noisy_action_uses_outcome(noisy):
    w = world_point(noisy, {"h": 10.0})
    a = parse_ground_action(noisy, "nmove(-2 ~ -1.5)")
    assert progress(noisy, w, a)["h"] == pytest.approx(11.5)
    assert likelihood(noisy, w, a) > 0
    with pytest.raises(ArityMismatch):
        progress(noisy, w, parse_ground_action(noisy, "nmove(-2)"))


def test_ground_alt(window):
    a = parse_ground_action(window, "setwin(0)")
    alt = ground_alt(window, a, (Sym("1"),))
    assert alt.actual_args == (Sym("1"),) and alt.nominal_args == a.nominal_args
    with pytest.raises(DomainMismatch):
        ground_alt(window, a, (Sym("7"),))


def test_window_likelihoods(window):
    w = world_point(window, {"h": 11.0, "win": "1"})
    assert likelihood(window, w, GroundAction("setwin", (Sym("0"),), (Sym("0"),))) == 0.75
    assert likelihood(window, w, GroundAction("setwin", (Sym("0"),), (Sym("1"),))) == 0.25
    assert likelihood(window, w, GroundAction("seewin", (Sym("1"),))) == 0.8


def test_inexecutable_trajectory():
    spec = parse_theory(
        "theory p\nfluent h : real\ninit p = 1\naction go(x: real) { poss = h > 0\n h' = h - x }\n"
    )
    w = world_point(spec, {"h": 1.0})
    traj = simulate(spec, w, [GroundAction("go", (2.0,)), GroundAction("go", (1.0,))])
    assert not traj.executable and traj.inexecutable_at == 1
    assert len(traj.points) == 2
    assert poss(spec, w, GroundAction("go", (0.0,)))


def test_simulation_error_reports_index():
    spec = parse_theory("theory d\nfluent h : real\ninit p = 1\naction div(x: real) { h' = h / x }\n")
    with pytest.raises(SimulationError) as ei:
        simulate(spec, world_point(spec, {"h": 1.0}), [GroundAction("div", (1.0,)), GroundAction("div", (0.0,))])
    assert "#1" in str(ei.value)


@given(reals, st.lists(st.floats(-5, 5), max_size=4))
def test_simulate_is_pure(h, xs):
    robot = library.theory("robot1d")
    w = world_point(robot, {"h": h, "v": 0.0})
    beta = [GroundAction("move", (x,)) for x in xs]
    assert simulate(robot, w, beta) == simulate(robot, w, beta)
