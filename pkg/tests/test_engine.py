import math
from dataclasses import replace

import numpy as np
import pytest

from belcal import kernels
from belcal.dsl import parse_formula, parse_ground_action, parse_query, parse_theory
from belcal.engine import EngineConfig, _equal_mass_axis, answer, bel, knows, marginal, resolve_config
from belcal.errors import (
    ConfigError,
    DegenerateBelief,
    DimensionLimit,
    FiniteFluentMarginal,
    UnboundedSupport,
)

FAST = EngineConfig(quad_points_per_dim=401, mc_samples=50_000)
MC = FAST.with_options({"backend": "mc"})


def B(spec, text, cfg=FAST):
    return bel(spec, parse_query(text, spec), cfg)


def test_uniform_prior_values(robot):
    assert B(robot, "bel (h <= 9) after []").value == pytest.approx(0.7, abs=1e-12)
    assert B(robot, "bel (h = 0) after [move(4)]").value == pytest.approx(0.2, abs=1e-12)
    assert B(robot, "bel (h@0 > 1) after [move(4)]").value == 1.0


def test_result_fields(robot):
    r = B(robot, "bel (h <= 9) after []")
    assert r.backend == "quad" and r.stderr is None
    assert r.value == pytest.approx(r.numerator / r.gamma)
    assert r.diagnostics["points_per_dim"] == 401
    assert r.diagnostics["layout"] == {"h": "uniform", "v": "equal-mass"}
    m = B(robot, "bel (h <= 9) after []", MC)
    assert m.backend == "mc" and m.stderr > 0
    assert abs(m.value - 0.7) <= 4 * m.stderr
    assert m.diagnostics["init_proposal"] == "exact"


@pytest.mark.parametrize("cfg", [FAST, MC], ids=["quad", "mc"])
def test_backends_on_noisy_action(noisy, cfg):
    r = B(noisy, "bel (h >= 11) after [nmove(-2)]", cfg)
    tol = 2e-3 if r.stderr is None else 4 * r.stderr
    assert r.value == pytest.approx(0.958534, abs=tol)


def test_discrete_outcomes_are_summed(window):
    for cfg in (FAST, MC):
        r = B(window, "bel (win = 0) after [setwin(0), seewin(0)]", cfg)
        tol = 1e-12 if r.stderr is None else 4 * r.stderr
        assert r.value == pytest.approx(0.875, abs=tol)


def test_degenerate(robot):
    with pytest.raises(DegenerateBelief):
        B(robot, "bel (h <= 9) after [sonar(-5)]")
    with pytest.raises(DegenerateBelief):
        B(robot, "bel (h <= 9) after [sonar(-5)]", MC)


def test_dimension_limit(noisy):
    with pytest.raises(DimensionLimit):
        B(noisy, "bel (h >= 11) after [nmove(1), nmove(1), nmove(1), nmove(1)]")
    r = B(noisy, "bel (h >= 11) after [nmove(1), nmove(1), nmove(1), nmove(1)]", MC)
    assert 0.0 <= r.value <= 1.0


def test_unbounded_support():
    spec = parse_theory("theory u\nfluent h : real\ninit p = 1\n")
    with pytest.raises(UnboundedSupport):
        bel(spec, parse_formula(spec, "h <= 0"), FAST)


def test_grid_only_prior_uses_box_proposal():
    spec = parse_theory("theory tri\nfluent h : real\ninit p = cases { h / 50 if 0 <= h and h <= 10 ; 0 }\n")
    phi = parse_formula(spec, "h <= 5")
    assert bel(spec, phi, FAST).value == pytest.approx(0.25, abs=1e-6)
    r = bel(spec, phi, MC)
    assert r.diagnostics["init_proposal"] != "exact"
    assert r.value == pytest.approx(0.25, abs=4 * r.stderr)


def test_gaussian_prior():
    spec = parse_theory("theory g\nfluent x : real\ninit p = gauss(x; 1, 4)\n")
    r = bel(spec, parse_formula(spec, "x <= 1"), EngineConfig())
    assert r.value == pytest.approx(0.5, abs=1e-12)
    r = bel(spec, parse_formula(spec, "x <= 3"), EngineConfig())
    assert r.value == pytest.approx(0.8413447460685429, abs=3e-4)


def test_equality_epsilon(robot):
    assert B(robot, "bel (h = 5) after []").value == 0.0
    cfg = FAST.with_options({"eps": 0.05})
    assert B(robot, "bel (h = 5) after []", cfg).value == pytest.approx(0.01, abs=2e-3)


def test_low_ess_is_flagged(noisy):
    r = B(noisy, "bel (h >= 11) after [sonar2(16)]", MC)
    assert r.diagnostics["low_ess"]
    r = B(noisy, "bel (h >= 11) after []", MC)
    assert not r.diagnostics["low_ess"]


def test_threads_do_not_change_results(noisy):
    q = "bel (h >= 11) after [nmove(-2), sonar2(11.5)]"
    for cfg in (replace(FAST, chunk_size=1 << 14), replace(MC, mc_chunk_size=4096)):
        one = B(noisy, q, replace(cfg, threads=1))
        many = B(noisy, q, replace(cfg, threads=3))
        assert (one.value, one.numerator, one.gamma, one.stderr) == (many.value, many.numerator, many.gamma, many.stderr)


@pytest.mark.skipif("compiled" not in kernels.AVAILABLE, reason="extension not built")
def test_kernels_agree(robot):
    q = "bel (h <= 9) after [sonar(5)]"
    a = B(robot, q, FAST.with_options({"kernel": "compiled"}))
    b = B(robot, q, FAST.with_options({"kernel": "python"}))
    assert a.value == pytest.approx(b.value, rel=1e-12)


def test_knows(robot):
    assert knows(robot, parse_query("knows (h >= 2 and h <= 12) after []", robot), FAST).value
    k = knows(robot, parse_query("knows (h <= 9) after []", robot), FAST)
    assert not k and k.violations > 0
    assert knows(robot, parse_query("knows (h@0 > 1) after [move(4)]", robot), MC).value


def test_marginal_atom_and_bins(robot):
    h = marginal(robot, "h", (parse_ground_action(robot, "move(4)"),), bins=8, range=(0, 8), cfg=FAST)
    assert [v for v, _ in h.atoms] == [0.0]
    assert h.atoms[0][1] == pytest.approx(0.2, abs=1e-9)
    np.testing.assert_allclose(h.masses, 0.1, atol=1e-9)
    assert h.total == pytest.approx(1.0, abs=1e-9)
    h = marginal(robot, parse_query("marginal h after [] bins=5 range=2,8", robot), cfg=FAST)
    assert h.overflow == pytest.approx(0.4, abs=1e-9) and h.underflow == 0.0
    assert h.rows()[-1][1] == math.inf


def test_marginal_without_range_has_no_atoms(noisy):
    h = marginal(noisy, parse_query("marginal h after [nmove(-2)] bins=12", noisy), cfg=FAST)
    assert h.atoms == ()
    assert h.total == pytest.approx(1.0, abs=1e-9)


def test_marginal_errors(window, robot):
    with pytest.raises(FiniteFluentMarginal):
        marginal(window, "win", cfg=FAST)
    with pytest.raises(ConfigError):
        marginal(robot, "h", bins=0, cfg=FAST)


def test_answer_dispatch(robot):
    assert answer(robot, parse_query("knows (h <= 12) after []", robot), FAST).value
    assert answer(robot, parse_query("bel (h <= 12) after []", robot), FAST).value == 1.0


def test_config_validation_and_aliases():
    with pytest.raises(ConfigError):
        EngineConfig(backend="exact")
    with pytest.raises(ConfigError):
        EngineConfig(mc_samples=0)
    with pytest.raises(ConfigError):
        EngineConfig().with_options({"nope": 1})
    with pytest.raises(ConfigError):
        EngineConfig().with_options({"grid": "many"})
    cfg = EngineConfig().with_options({"grid": "501", "samples": "1000", "trunc_sigmas": "6", "eps": "0.1"})
    assert (cfg.quad_points_per_dim, cfg.mc_samples, cfg.gauss_truncation_sigmas, cfg.equality_epsilon) == (
        501, 1000, 6.0, 0.1)


def test_config_precedence():
    spec = parse_theory("theory c\nfluent h : real\nconfig grid = 101\nconfig seed = 5\ninit p = cases { 1 if 0 <= h and h <= 1 ; 0 }\n")
    q = parse_query("bel (h <= 0.5) after [] grid=201", spec)
    cfg = resolve_config(spec, q, None)
    assert (cfg.quad_points_per_dim, cfg.seed) == (201, 5)
    assert resolve_config(spec, q, EngineConfig()).quad_points_per_dim == 2001


def test_threads_env(monkeypatch):
    monkeypatch.setenv("BELCAL_THREADS", "2")
    assert EngineConfig().workers() == 2
    assert EngineConfig(threads=1).workers() == 1
    monkeypatch.setenv("BELCAL_THREADS", "x")
    with pytest.raises(ConfigError):
        EngineConfig().workers()


def test_equal_mass_axis():
    z, w = _equal_mass_axis(1000, -8.0, 8.0)
    assert np.all(np.diff(z) > 0)
    np.testing.assert_allclose(z, -z[::-1], atol=1e-12)
    phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    assert math.fsum(phi * w) == pytest.approx(1.0 - math.erfc(8 / math.sqrt(2)), abs=1e-12)
    # the second moment converges as the cells shrink
    errs = []
    for n in (250, 1000, 4000):
        z, w = _equal_mass_axis(n, -8.0, 8.0)
        phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        errs.append(abs(math.fsum(z * z * phi * w) - 1.0))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 5e-4
