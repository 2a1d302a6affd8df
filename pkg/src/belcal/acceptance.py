"""Acceptance table: named numerical targets on the bundled theories.

``run_all`` evaluates every row and returns ``Row`` records; ``belcal
test-paper`` prints them and tests/test_acceptance.py asserts on them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

from . import library
from .dsl import parse_formula, parse_ground_action, parse_query
from .engine import EngineConfig, bel, marginal
from .expr import Sym
from .oracle import ErrFn, PriorGrid, bayes_posterior, enumerate_bel
from .properties import PROPERTIES, run_property

QUAD = EngineConfig()


@dataclass
class Check:
    label: str
    observed: object
    target: str
    ok: bool

    def __str__(self) -> str:
        obs = f"{self.observed:.6g}" if isinstance(self.observed, float) else str(self.observed)
        return f"{'ok  ' if self.ok else 'FAIL'} {self.label}: {obs} (target {self.target})"


@dataclass
class Row:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and bool(self.checks) and all(c.ok for c in self.checks)

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"[{status}] {self.number:2d}. {self.title} ({self.seconds:.1f}s)"


def _bel(theory: str, text: str, cfg: EngineConfig = QUAD) -> float:
    spec = library.theory(theory)
    return bel(spec, parse_query(text, spec), cfg).value


def _near(label: str, x: float, target: float, tol: float) -> Check:
    return Check(label, x, f"{target:g} ± {tol:g}", abs(x - target) <= tol)


def _at_most(label: str, x: float, bound: float) -> Check:
    return Check(label, x, f"<= {bound:g}", x <= bound)


# -- rows ------------------------------------------------------------------------------

def row1():
    return [_near("bel(h<=9, [])", _bel("robot1d", "bel (h <= 9) after []"), 0.7, 1e-3)]


def row2():
    q = "bel (h = 3 or h = 4 or h = 7) after []"
    fine = EngineConfig(quad_points_per_dim=20001)
    return [
        _at_most("default grid", _bel("robot1d", q), 2e-3),
        _at_most("grid 20001", _bel("robot1d", q, fine), 2e-4),
    ]


def row3():
    return [_near("bel(h > 7v, [])", _bel("robot1d", "bel (h > 7 * v) after []"), 0.6, 0.01)]


def row4():
    return [
        _near("bel(h=0, [move(4)])", _bel("robot1d", "bel (h = 0) after [move(4)]"), 0.2, 1e-3),
        _near("bel(h<=3, [move(4)])", _bel("robot1d", "bel (h <= 3) after [move(4)]"), 0.5, 1e-3),
    ]


def row5():
    x = _bel("robot1d", "bel (h@0 > 1) after [move(4)]")
    return [Check("bel(h@0 > 1, [move(4)])", x, "1 exactly", x == 1.0)]


def row6():
    return [
        _near("bel(h=4, [move(4), move(-4)])", _bel("robot1d", "bel (h = 4) after [move(4), move(-4)]"), 0.2, 1e-3),
        _at_most("bel(h=4, [move(-4), move(4)])", _bel("robot1d", "bel (h = 4) after [move(-4), move(4)]"), 2e-3),
    ]


def row7():
    a = _bel("robot1d", "bel (-1 <= v and v <= 1) after [move(4)]")
    b = _bel("robot1d", "bel (-1 <= v and v <= 1) after []")
    c = _bel("robot1d", "bel (v <= 7) after [up(2.5)]")
    d = _bel("robot1d", "bel (v <= 4.5) after []")
    return [
        Check("bel(-1<=v<=1, [move(4)]) - bel(-1<=v<=1, [])", a - b, "0 exactly", a - b == 0.0),
        _near("bel(v<=7, [up(2.5)]) - bel(v<=4.5, [])", c - d, 0.0, 1e-6),
    ]


def row8():
    xs = [_bel("robot1d", f"bel (h <= 9) after [{a}]") for a in ("", "sonar(5)", "sonar(5), sonar(5)")]
    return [
        _near("bel(h<=9, [sonar(5)])", xs[1], 0.97, 0.01),
        _near("bel(h<=9, [sonar(5), sonar(5)])", xs[2], 0.99, 0.01),
        Check("strictly increasing over prefixes", tuple(round(x, 6) for x in xs), "x0 < x1 < x2",
              xs[0] < xs[1] < xs[2]),
    ]


def row9():
    robot = library.theory("robot1d")
    prior = PriorGrid.from_spec(robot, {"h": (2.0, 12.0, 3001)}, {"v": (-32.0, 32.0, 100)})
    sonar = ErrFn.from_action(robot, "sonar")
    phi = parse_formula(robot, "h <= 9")
    checks = []
    for zs in ([5.0], [5.0, 5.0]):
        acts = ", ".join(f"sonar({z:g})" for z in zs)
        engine = _bel("robot1d", f"bel (h <= 9) after [{acts}]")
        oracle = bayes_posterior(prior, sonar, zs, phi)
        checks.append(_near(f"engine - oracle, [{acts}]", engine - oracle, 0.0, 2e-3))
    wall = library.theory("sensewall")
    prior = PriorGrid.from_spec(wall, {"h": (2.0, 12.0, 3001)})
    oracle = bayes_posterior(prior, ErrFn.from_action(wall, "sensewall"), Sym("close"),
                             parse_formula(wall, "h <= 4"))
    engine = _bel("sensewall", "bel (h <= 4) after [sensewall(close)]")
    checks.append(_near("engine - oracle, [sensewall(close)]", engine - oracle, 0.0, 2e-3))
    return checks


def row10():
    rows = [
        ("bel (h >= 11) after [nmove(-2)]", 0.95),
        ("bel (h >= 10) after [nmove(-2), nmove(2)]", 0.74),
        ("bel (h >= 11) after [nmove(-2), sonar2(11.5)]", 0.94),
        ("bel (h >= 11) after [nmove(-2), sonar2(11.5), sonar2(12.6)]", 0.99),
    ]
    return [_near(q, _bel("noisy", q), t, 0.01) for q, t in rows]


def row11():
    return [
        _near("bel(h<=4, [sensewall(close)])", _bel("sensewall", "bel (h <= 4) after [sensewall(close)]"),
              3 / 11, 1e-3),
        _near("bel(h<=4, [move(1), sensewall(close)])",
              _bel("sensewall", "bel (h <= 4) after [move(1), sensewall(close)]"), 5 / 12, 1e-3),
    ]


def row12():
    cases = [
        ("[]", 0.4),
        ("[move(1)]", 0.4),
        ("[setwin(0)]", 0.75),
        ("[setwin(0), seewin(0)]", 0.875),
    ]
    sub = library.theory("window_win")
    checks = []
    for alpha, t in cases:
        checks.append(_near(f"quad bel(win=closed, {alpha})", _bel("window", f"bel (win = 0) after {alpha}"), t, 1e-6))
    for alpha, t in cases:
        exact = enumerate_bel(sub, parse_query(f"bel (win = 0) after {alpha}", sub))
        checks.append(_near(f"enumerated bel(win=closed, {alpha})", float(exact), t, 1e-12))
    return checks


def row13(cases: int = 100, seed: int = 0):
    out = []
    for prop in PROPERTIES:
        rep = run_property(prop, n=cases, seed=seed)
        detail = f"{len(rep.failures)}/{rep.cases} failures"
        if rep.failures:
            case, msg = rep.failures[0]
            detail += f"; first: {case}: {msg}"
        out.append(Check(prop.name, detail, "0 failures", rep.ok))
    return out


def row14():
    robot = library.theory("robot1d")
    checks = []
    for backend in ("quad", "mc"):
        h = marginal(robot, "h", (parse_ground_action(robot, "move(4)"),), bins=8,
                     range=(0.0, 8.0), cfg=EngineConfig(backend=backend))
        total = h.total
        checks.append(_near(f"{backend}: total mass", total, 1.0, 1e-6))
        if backend == "quad":
            at0 = [m for v, m in h.atoms if v == 0.0]
            checks.append(Check("quad: atom at 0", at0[0] if at0 else "missing", "0.2 ± 0.001",
                                bool(at0) and abs(at0[0] - 0.2) <= 1e-3))
            widths = h.edges[1:] - h.edges[:-1]
            dens = h.masses / widths
            dev = float(max(abs(d - 0.1) for d in dens))
            checks.append(_at_most("quad: max |mass per unit - 0.1| over (0, 8]", dev, 1e-3))
    return checks


ROWS: tuple[tuple[int, str, Callable[[], list[Check]]], ...] = (
    (1, "robot1d: bel(h<=9) = 0.7", row1),
    (2, "robot1d: zero-measure disjunction", row2),
    (3, "robot1d: bel(h > 7v) ~ 0.6", row3),
    (4, "robot1d: after move(4)", row4),
    (5, "robot1d: history reference is certain", row5),
    (6, "robot1d: move order matters at the wall", row6),
    (7, "robot1d: frame and shift invariance", row7),
    (8, "robot1d: repeated sonar readings", row8),
    (9, "oracle: grid posterior agrees with the engine", row9),
    (10, "noisy: nmove and sonar2", row10),
    (11, "sensewall: binary sensor", row11),
    (12, "window: noisy window switch", row12),
    (13, "property suites", row13),
    (14, "marginal: atom at the wall", row14),
)


def run_row(number: int) -> Row:
    _, title, fn = ROWS[number - 1]
    row = Row(number, title)
    t0 = time.perf_counter()
    try:
        row.checks = fn()
    except Exception as e:  # a crash is a failed row, reported rather than raised
        row.error = f"{type(e).__name__}: {e}"
    row.seconds = time.perf_counter() - t0
    return row


def run_all() -> list[Row]:
    return [run_row(n) for n, _, _ in ROWS]


def render(rows: list[Row], verbose: bool = True) -> str:
    lines = []
    for r in rows:
        lines.append(r.line())
        if verbose or not r.ok:
            lines.extend("      " + str(c) for c in r.checks)
            if r.error:
                lines.append("      error: " + r.error)
    passed = sum(r.ok for r in rows)
    total_s = math.fsum(r.seconds for r in rows)
    lines.append(f"{passed}/{len(rows)} criteria passed in {total_s:.1f}s")
    return "\n".join(lines)


__all__ = ["Check", "ROWS", "Row", "render", "run_all", "run_row"]
