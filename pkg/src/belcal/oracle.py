"""Reference computations written independently of the engine's integration code.

``bayes_posterior`` conditions a prior grid on sensor readings directly:
posterior(phi) = sum mass * prod err(z, f) * [phi] / sum mass * prod err(z, f).
``enumerate_bel`` sums exactly, in rationals, over every initial vector and
outcome vector of an all-finite theory.  Evaluated weights are read back as
rationals with bounded denominators, so decimal constants stay exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .dynamics import likelihood, simulate
from .errors import DegenerateBelief, InfiniteDomain, ZeroEvidence
from .expr import Env, Expr, FiniteDomain, Formula, Value, WorldPoint, eval_expr, eval_formula, fluent_refs
from .theory import GroundAction, Query, TheorySpec


@dataclass(frozen=True)
class PriorGrid:
    """Midpoint-rule prior: world points (kept fluents only) with cell masses."""

    nodes: tuple[tuple[WorldPoint, float], ...]

    def __post_init__(self) -> None:
        if any(m < 0 for _, m in self.nodes):
            raise ValueError("prior masses must be non-negative")
        if not math.fsum(m for _, m in self.nodes) > 0:
            raise ValueError("prior has no mass")

    @classmethod
    def from_spec(cls, spec: TheorySpec, ranges: Mapping[str, tuple[float, float, int]],
                  marginalize: Mapping[str, tuple[float, float, int]] | None = None) -> "PriorGrid":
        """Grid over ``ranges`` (lo, hi, points) with ``marginalize`` fluents summed out.

        Finite fluents are enumerated and kept.  Every real fluent must appear in
        exactly one of the two mappings.
        """
        marginalize = dict(marginalize or {})
        kept = [f for f in spec.fluents if f.name in ranges or not f.is_real]
        for f in spec.real_fluents:
            if (f.name in ranges) == (f.name in marginalize):
                raise ValueError(f"real fluent {f.name} must be gridded or marginalized")

        def axis(lo: float, hi: float, n: int) -> tuple[list[float], float]:
            h = (hi - lo) / n
            return [lo + (i + 0.5) * h for i in range(n)], h

        def values(f):
            if f.is_real:
                return axis(*ranges[f.name])
            return list(f.domain.values), 1.0

        kept_axes = [values(f) for f in kept]
        aux = [(name, *axis(*marginalize[name])) for name in marginalize]
        aux_cell = math.prod(h for _, _, h in aux)
        cell = math.prod(h for _, h in kept_axes)
        names = spec.fluent_names
        nodes = []
        for combo in itertools.product(*(vals for vals, _ in kept_axes)):
            point = {f.name: v for f, v in zip(kept, combo)}
            terms = []
            for extra in itertools.product(*(pts for _, pts, _ in aux)):
                full = dict(point)
                full.update({name: v for (name, _, _), v in zip(aux, extra)})
                w = WorldPoint(names, [full[n] for n in names])
                terms.append(eval_expr(spec.init_p, Env((w,), {}, 0)))
            mass = math.fsum(terms) * aux_cell * cell
            nodes.append((WorldPoint([f.name for f in kept], list(combo)), mass))
        return cls(tuple(nodes))


@dataclass(frozen=True)
class ErrFn:
    """Sensor error profile Err(z, u): ``expr`` with reading ``param`` and true value ``fluent``."""

    expr: Expr
    param: str
    fluent: str

    @classmethod
    def from_action(cls, spec: TheorySpec, action: str) -> "ErrFn":
        decl = spec.action(action)
        if len(decl.params) != 1:
            raise ValueError(f"{action} must take exactly one reading")
        names = {r.name for r in fluent_refs(decl.likelihood)}
        if len(names) != 1:
            raise ValueError(f"likelihood of {action} must measure exactly one fluent")
        return cls(decl.likelihood, decl.params[0].name, names.pop())

    def __call__(self, z: Value, u: Value) -> float:
        w = WorldPoint((self.fluent,), (u,))
        v = eval_expr(self.expr, Env((w,), {self.param: z}, 0))
        if v < 0:
            raise ValueError(f"Err({z}, {u}) = {v} < 0")
        return v


def bayes_posterior(prior: PriorGrid, err: ErrFn, z: Value | Sequence[Value], phi: Formula) -> float:
    """Posterior probability of ``phi`` after reading(s) ``z``."""
    readings = list(z) if isinstance(z, (list, tuple)) else [z]
    num, den = [], []
    for w, mass in prior.nodes:
        lik = mass
        for r in readings:
            lik *= err(r, w[err.fluent])
        den.append(lik)
        if lik and eval_formula(phi, Env((w,), {}, 0)):
            num.append(lik)
    d = math.fsum(den)
    if not d > 0:
        raise ZeroEvidence("the readings have zero likelihood under the prior")
    return math.fsum(num) / d


def _finite_or_raise(spec: TheorySpec, alpha: Sequence[GroundAction]) -> None:
    for f in spec.fluents:
        if not isinstance(f.domain, FiniteDomain):
            raise InfiniteDomain(f"fluent {f.name} is real-valued")
    for a in alpha:
        for p in spec.action(a.name).actual_params:
            if not isinstance(p.domain, FiniteDomain):
                raise InfiniteDomain(f"actual parameter {a.name}.{p.name} is real-valued")


def _rational(x: float) -> Fraction:
    """Nearest fraction with a denominator up to 1e12; recovers decimal literals like 0.4 exactly."""
    return Fraction(x).limit_denominator(10**12)


def enumerate_bel(spec: TheorySpec, q: Query | Formula, alpha: Sequence[GroundAction] = ()) -> Fraction:
    """Exact degree of belief on an all-finite theory, as a rational."""
    if isinstance(q, Query):
        phi, alpha = q.formula, q.alpha
    else:
        phi = q
    _finite_or_raise(spec, alpha)
    outcome_sets = []
    for a in alpha:
        decl = spec.action(a.name)
        outcome_sets.append(list(itertools.product(*(p.domain.values for p in decl.actual_params))))
    num = Fraction(0)
    den = Fraction(0)
    for x in itertools.product(*(f.domain.values for f in spec.fluents)):
        w0 = WorldPoint(spec.fluent_names, x)
        p0 = _rational(eval_expr(spec.init_p, Env((w0,), {}, 0)))
        if p0 == 0:
            continue
        for zs in itertools.product(*outcome_sets):
            beta = [GroundAction(a.name, a.nominal_args, tuple(z)) for a, z in zip(alpha, zs)]
            traj = simulate(spec, w0, beta)
            if not traj.executable:
                continue
            weight = p0
            for point, b in zip(traj.points, beta):
                weight *= _rational(likelihood(spec, point, b))
                if weight == 0:
                    break
            if weight == 0:
                continue
            den += weight
            if eval_formula(phi, Env(traj.points, {}, len(traj.points) - 1)):
                num += weight
    if den == 0:
        raise DegenerateBelief("every initial vector and outcome has zero weight")
    return num / den


__all__ = ["PriorGrid", "ErrFn", "bayes_posterior", "enumerate_bel"]
