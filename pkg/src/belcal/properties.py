"""Generated-input property checks over the bundled theories.

Case generators draw through a small ``Chooser`` interface, so the same
generators serve a seeded numpy stream (``belcal test-paper``) and hypothesis
(the test suite).  Each ``check_*`` returns ``None`` on success or a message.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from . import library
from .dsl import parse_formula, parse_ground_action, parse_query
from .dynamics import progress, world_point
from .engine import EngineConfig, bel
from .errors import DegenerateBelief
from .expr import Not, Sym
from .theory import GroundAction, TheorySpec

# properties that hold at any grid or sample size run at a reduced cost
FAST = EngineConfig(quad_points_per_dim=401, mc_samples=20_000, mc_chunk_size=4096)


class Chooser(Protocol):
    def uniform(self, lo: float, hi: float) -> float: ...
    def integers(self, lo: int, hi: int) -> int: ...  # inclusive
    def choice(self, seq: Sequence): ...


class NumpyChooser:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def uniform(self, lo: float, hi: float) -> float:
        return float(self.rng.uniform(lo, hi))

    def integers(self, lo: int, hi: int) -> int:
        return int(self.rng.integers(lo, hi + 1))

    def choice(self, seq: Sequence):
        return seq[int(self.rng.integers(0, len(seq)))]


def _n(c: Chooser, lo: float, hi: float, step: float = 0.25) -> str:
    """A grid-rounded number as query text."""
    x = round(c.uniform(lo, hi) / step) * step
    return repr(float(x)) if x != int(x) else str(int(x))


@dataclass(frozen=True)
class Case:
    theory: str
    query: str
    backend: str = "quad"
    seed: int = 0
    extra: tuple = field(default=())

    def __str__(self) -> str:
        return f"[{self.theory}] {self.query} ({self.backend}, seed={self.seed})"


def _robot_formula(c: Chooser) -> str:
    kind = c.integers(0, 6)
    if kind == 0:
        return f"h <= {_n(c, 0, 14)}"
    if kind == 1:
        return f"v <= {_n(c, -8, 8)}"
    if kind == 2:
        a = _n(c, -6, 0)
        return f"{a} <= v and v <= {_n(c, 0, 6)}"
    if kind == 3:
        return f"h > {_n(c, -8, 8)} * v"
    if kind == 4:
        return f"h@0 > {_n(c, 1, 13)}"
    if kind == 5:
        return "h = 0"
    return f"h <= {_n(c, 0, 14)} or v >= {_n(c, -8, 8)}"


def _robot_action(c: Chooser) -> str:
    kind = c.integers(0, 2)
    if kind == 0:
        return f"move({_n(c, -5, 5)})"
    if kind == 1:
        return f"up({_n(c, -3, 3)})"
    return f"sonar({_n(c, 0, 12)})"


def _noisy(c: Chooser) -> tuple[str, list[str]]:
    phi = c.choice([f"h >= {_n(c, 6, 15)}", f"h <= {_n(c, 6, 15)}"])
    acts = []
    if c.integers(0, 1):
        acts.append(f"nmove({_n(c, -3, 3)})")
    if c.integers(0, 1):
        acts.append(f"sonar2({_n(c, 8, 14)})")
    if len(acts) == 2 and c.integers(0, 1):
        acts.reverse()
    return phi, acts


def _sensewall(c: Chooser) -> tuple[str, list[str]]:
    acts = [
        c.choice([f"move({_n(c, -3, 3)})", "sensewall(close)", "sensewall(far)"])
        for _ in range(c.integers(0, 2))
    ]
    return f"h <= {_n(c, 1, 13)}", acts


def _window(c: Chooser) -> tuple[str, list[str]]:
    phi = c.choice(["win = 0", "win = 1", f"h <= {_n(c, 8, 12)} and win = 1"])
    acts = [
        c.choice([f"move({_n(c, -2, 2)})", f"setwin({c.integers(0, 1)})", f"seewin({c.integers(0, 1)})"])
        for _ in range(c.integers(0, 3))
    ]
    return phi, acts


def gen_bel_case(c: Chooser, backend: str | None = None) -> Case:
    """A random bel query on a random bundled theory."""
    th = c.choice(["robot1d", "noisy", "sensewall", "window"])
    if th == "robot1d":
        phi, acts = _robot_formula(c), [_robot_action(c) for _ in range(c.integers(0, 2))]
    else:
        phi, acts = {"noisy": _noisy, "sensewall": _sensewall, "window": _window}[th](c)
    be = backend or c.choice(["quad", "mc"])
    return Case(th, f"bel ({phi}) after [{', '.join(acts)}]", be, c.integers(0, 2**31 - 1))


def gen_agreement_case(c: Chooser) -> Case:
    """A bundled bel query paired with an MC seed."""
    th = c.choice(["robot1d", "noisy", "sensewall", "window"])
    texts = [q.text for q in library.queries(th) if q.kind == "bel"]
    return Case(th, c.choice(texts), "mc", c.integers(0, 2**31 - 1))


def gen_actual_arg_case(c: Chooser) -> Case:
    """A query whose noisy actions are written with an explicit actual argument."""
    if c.integers(0, 1):
        x = _n(c, -3, 3)
        y = _n(c, -6, 6, 0.01)
        acts = [f"nmove({x} ~ {y})"]
        if c.integers(0, 1):
            acts.append(f"sonar2({_n(c, 8, 14)})")
        q = f"bel (h >= {_n(c, 6, 15)}) after [{', '.join(acts)}]"
        return Case("noisy", q, c.choice(["quad", "mc"]), c.integers(0, 2**31 - 1))
    acts = []
    for _ in range(c.integers(1, 3)):
        k = c.integers(0, 2)
        if k == 0:
            acts.append(f"setwin({c.integers(0, 1)} ~ {c.integers(0, 1)})")
        elif k == 1:
            acts.append(f"seewin({c.integers(0, 1)})")
        else:
            acts.append(f"move({_n(c, -2, 2)})")
    q = f"bel (win = {c.integers(0, 1)}) after [{', '.join(acts)}]"
    return Case("window", q, c.choice(["quad", "mc"]), c.integers(0, 2**31 - 1))


def gen_frame_case(c: Chooser) -> Case:
    """A random point and a random action of a bundled theory."""
    th = c.choice(["robot1d", "noisy", "sensewall", "window"])
    spec = library.theory(th)
    vals = []
    for f in spec.fluents:
        vals.append(c.choice(list(f.domain.values)) if not f.is_real else float(_n(c, -20, 20, 0.01)))
    a = c.choice(list(spec.actions))
    args = []
    for p in a.nominal_params:
        args.append(str(c.choice(list(p.domain.values))) if not p.is_real else _n(c, -10, 10, 0.01))
    act = f"{a.name}({', '.join(args)}"
    if a.actual_params:
        outs = [str(c.choice(list(p.domain.values))) if not p.is_real else _n(c, -10, 10, 0.01)
                for p in a.actual_params]
        act += " ~ " + ", ".join(outs)
    act += ")"
    lo = _n(c, -6, 0)
    hi = _n(c, 0, 6)
    return Case(th, act, "quad", 0, (tuple(vals), f"{lo} <= v and v <= {hi}", f"move({_n(c, -5, 5)})"))


# -- checks -------------------------------------------------------------------------

def _cfg(case: Case, base: EngineConfig = FAST) -> EngineConfig:
    return base.with_options({"backend": case.backend, "seed": case.seed})


def check_complementarity(case: Case) -> str | None:
    spec = library.theory(case.theory)
    q = parse_query(case.query, spec)
    cfg = _cfg(case)
    try:
        a = bel(spec, q.formula, cfg, q.alpha)
    except DegenerateBelief:
        return None
    b = bel(spec, Not(q.formula), cfg, q.alpha)
    tol = 1e-9
    if case.backend == "mc":
        tol = max(tol, 3.0 * math.hypot(a.stderr, b.stderr))
    err = abs(a.value + b.value - 1.0)
    if not (0.0 <= a.value <= 1.0 and 0.0 <= b.value <= 1.0):
        return f"value out of range: {a.value}, {b.value}"
    return None if err <= tol else f"bel + bel(not) - 1 = {err:.3e} > {tol:.1e}"


_quad_cache: dict[tuple[str, str], float] = {}


def check_backend_agreement(case: Case) -> str | None:
    spec = library.theory(case.theory)
    q = parse_query(case.query, spec)
    key = (case.theory, case.query)
    if key not in _quad_cache:
        _quad_cache[key] = bel(spec, q, EngineConfig()).value
    quad = _quad_cache[key]
    mc = bel(spec, q, EngineConfig(backend="mc", seed=case.seed))
    tol = max(1e-3, 3.0 * mc.stderr)
    diff = abs(quad - mc.value)
    return None if diff <= tol else f"|quad - mc| = {diff:.2e} > {tol:.2e} (quad {quad:.6f}, mc {mc.value:.6f})"


def _bits(r) -> tuple:
    return (r.value, r.numerator, r.gamma, r.stderr)


def check_seed_determinism(case: Case) -> str | None:
    spec = library.theory(case.theory)
    q = parse_query(case.query, spec)
    cfg = _cfg(case).with_options({"backend": "mc", "threads": 1})
    try:
        first = bel(spec, q, cfg)
    except DegenerateBelief:
        return None
    again = bel(spec, q, cfg)
    threaded = bel(spec, q, cfg.with_options({"threads": 4}))
    if _bits(first) != _bits(again):
        return f"rerun differs: {_bits(first)} vs {_bits(again)}"
    if _bits(first) != _bits(threaded):
        return f"4 threads differ from 1: {_bits(first)} vs {_bits(threaded)}"
    return None


def _strip_actuals(alpha: Sequence[GroundAction]) -> tuple[GroundAction, ...]:
    return tuple(GroundAction(a.name, a.nominal_args) for a in alpha)


def check_actual_arg_irrelevance(case: Case) -> str | None:
    spec = library.theory(case.theory)
    q = parse_query(case.query, spec)
    cfg = _cfg(case)
    try:
        with_args = bel(spec, q.formula, cfg, q.alpha)
    except DegenerateBelief:
        return None
    without = bel(spec, q.formula, cfg, _strip_actuals(q.alpha))
    if _bits(with_args) != _bits(without):
        return f"supplying actual arguments changed the result: {_bits(with_args)} vs {_bits(without)}"
    return None


def check_frame_invariance(case: Case) -> str | None:
    spec = library.theory(case.theory)
    values, phi_text, move_text = case.extra
    w = world_point(spec, dict(zip(spec.fluent_names, values)))
    a = parse_ground_action(spec, case.query)
    decl = spec.action(a.name)
    w2 = progress(spec, w, a)
    for f in spec.fluent_names:
        if f not in decl.ssa and w2[f] != w[f]:
            return f"{a} changed unmentioned fluent {f}: {w[f]!r} -> {w2[f]!r}"
    if decl.kind == "sensing" and w2 != w:
        return f"sensing action {a} changed the state"
    if case.theory == "robot1d":
        phi = parse_formula(spec, phi_text)
        mv = parse_ground_action(spec, move_text)
        before = bel(spec, phi, FAST, ())
        after = bel(spec, phi, FAST, (mv,))
        if before.value != after.value:
            return f"bel({phi_text}) changed under {move_text}: {before.value!r} -> {after.value!r}"
    return None


@dataclass(frozen=True)
class Property:
    name: str
    generate: Callable[[Chooser], Case]
    check: Callable[[Case], str | None]


PROPERTIES = (
    Property("complementarity", gen_bel_case, check_complementarity),
    Property("backend agreement", gen_agreement_case, check_backend_agreement),
    Property("seed determinism", lambda c: gen_bel_case(c, "mc"), check_seed_determinism),
    Property("actual-argument irrelevance", gen_actual_arg_case, check_actual_arg_irrelevance),
    Property("frame invariance", gen_frame_case, check_frame_invariance),
)


@dataclass
class PropertyReport:
    name: str
    cases: int
    failures: list[tuple[Case, str]]

    @property
    def ok(self) -> bool:
        return not self.failures


def run_property(prop: Property, n: int = 100, seed: int = 0) -> PropertyReport:
    chooser = NumpyChooser(np.random.default_rng(seed))
    failures = []
    for _ in range(n):
        case = prop.generate(chooser)
        msg = prop.check(case)
        if msg is not None:
            failures.append((case, msg))
    return PropertyReport(prop.name, n, failures)


__all__ = [
    "Case",
    "Chooser",
    "FAST",
    "NumpyChooser",
    "PROPERTIES",
    "Property",
    "PropertyReport",
    "run_property",
    "Sym",
]
