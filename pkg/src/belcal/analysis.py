"""Static analysis of initial densities and likelihoods.

The samplers need ``init_p`` as a set of disjoint boxes, each carrying a
constant times independent gauss factors.  The quadrature backend only needs a
bounding box for every real fluent, which is derivable for a wider class of
initial densities ("grid-only" forms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import UnboundedSupport, UnrecognizedInitForm, UnrecognizedLikelihoodForm
from .expr import (
    Binary,
    BoolConst,
    Cases,
    Compare,
    Const,
    Env,
    Expr,
    FluentRef,
    Formula,
    Gauss,
    ParamRef,
    WorldPoint,
    conjuncts,
    eval_expr,
    fluent_refs,
    is_ground,
    walk,
)
from .theory import ActionDecl, TheorySpec

_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}


@dataclass
class InitBranch:
    """One disjoint piece of ``init_p``: a box times a constant times gauss factors."""

    intervals: dict[str, tuple[float, float]] = field(default_factory=dict)
    allowed: dict[str, frozenset] = field(default_factory=dict)
    const: float = 1.0
    gauss: dict[str, tuple[float, float]] = field(default_factory=dict)  # fluent -> (mean, var)
    value_ok: bool = True  # value factored into const and gauss factors
    guard_ok: bool = True  # every guard atom understood

    def interval(self, name: str) -> tuple[float, float]:
        return self.intervals.get(name, (-math.inf, math.inf))

    def is_empty(self) -> bool:
        if self.const == 0.0:
            return True
        if any(lo >= hi for lo, hi in self.intervals.values()):
            return True
        return any(not s for s in self.allowed.values())


def _ground_value(e: Expr):
    return eval_expr(e, Env((WorldPoint((), ()),), {}, 0))


def _guard_atoms(spec: TheorySpec, guard: Formula, br: InitBranch) -> None:
    for atom in conjuncts(guard):
        if isinstance(atom, BoolConst):
            if not atom.value:
                br.const = 0.0
            continue
        if not isinstance(atom, Compare):
            br.guard_ok = False
            continue
        op, left, right = atom.op, atom.left, atom.right
        if not isinstance(left, FluentRef) and isinstance(right, FluentRef):
            op, left, right = _FLIP[op], right, left
        if not (isinstance(left, FluentRef) and left.at is None and is_ground(right)):
            br.guard_ok = False
            continue
        v = _ground_value(right)
        decl = spec.fluent(left.name)
        if decl.is_real:
            lo, hi = br.interval(left.name)
            if op in ("<", "<="):
                hi = min(hi, v)
            elif op in (">", ">="):
                lo = max(lo, v)
            elif op == "=":
                # a point has no volume
                lo, hi = max(lo, v), min(hi, v)
            else:
                continue
            br.intervals[left.name] = (lo, hi)
        else:
            cur = br.allowed.get(left.name, frozenset(decl.domain.values))
            if op == "=":
                cur = cur & {v}
            elif op == "!=":
                cur = cur - {v}
            else:
                br.guard_ok = False
                continue
            br.allowed[left.name] = cur


def affine_coeffs(f, at=(0.0, 1.0, 2.0), rtol: float = 1e-9):
    """``(slope, intercept)`` of a one-argument function probed at three points, or None."""
    d0, d1, d2 = (f(x) for x in at)
    a = d1 - d0
    if a == 0.0 or abs((d2 - d1) - a) > rtol * max(1.0, abs(d0), abs(d1), abs(d2)):
        return None
    return a, d0


def _factor(spec: TheorySpec, value: Expr, br: InitBranch) -> None:
    factors: list[Expr] = []
    stack = [value]
    while stack:
        e = stack.pop()
        if isinstance(e, Binary) and e.op == "*":
            stack += [e.left, e.right]
        else:
            factors.append(e)
    for f in factors:
        if is_ground(f):
            br.const *= float(_ground_value(f))
            continue
        if isinstance(f, Gauss) and is_ground(f.mean) and is_ground(f.var):
            refs = fluent_refs(f.arg)
            names = {r.name for r in refs}
            if len(names) == 1 and all(r.at is None for r in refs) and not any(
                isinstance(n, ParamRef) for n in walk(f.arg)
            ):
                name = names.pop()
                if spec.fluent(name).is_real and name not in br.gauss:
                    m, var = float(_ground_value(f.mean)), float(_ground_value(f.var))

                    def arg_at(x: float, _n=name, _a=f.arg) -> float:
                        return eval_expr(_a, Env((WorldPoint((_n,), (x,)),), {}, 0))

                    co = affine_coeffs(arg_at)
                    if co is not None and var > 0:
                        a, b = co
                        br.gauss[name] = ((m - b) / a, var / (a * a))
                        br.const /= abs(a)
                        continue
        br.value_ok = False


def init_branches(spec: TheorySpec) -> list[InitBranch]:
    """Split ``init_p`` into its cases branches (dropping empty ones)."""
    init = spec.init_p
    pieces: list[tuple[Formula, Expr]]
    if isinstance(init, Cases):
        pieces = list(init.branches)
        if not (is_ground(init.default) and _ground_value(init.default) == 0.0):
            pieces.append((BoolConst(True), init.default))
    else:
        pieces = [(BoolConst(True), init)]
    out = []
    for guard, value in pieces:
        br = InitBranch()
        _guard_atoms(spec, guard, br)
        _factor(spec, value, br)
        if not br.is_empty():
            out.append(br)
    return out


def _overlap(a: InitBranch, b: InitBranch, spec: TheorySpec) -> bool:
    for f in spec.fluents:
        if f.is_real:
            (l1, h1), (l2, h2) = a.interval(f.name), b.interval(f.name)
            if min(h1, h2) <= max(l1, l2):
                return False
        else:
            dom = frozenset(f.domain.values)
            if not (a.allowed.get(f.name, dom) & b.allowed.get(f.name, dom)):
                return False
    return True


def decompose_init(spec: TheorySpec) -> list[InitBranch]:
    """Disjoint branches for exact sampling; raises UnrecognizedInitForm otherwise."""
    brs = init_branches(spec)
    if not brs:
        raise UnrecognizedInitForm("init_p is zero everywhere")
    for br in brs:
        if not (br.value_ok and br.guard_ok):
            raise UnrecognizedInitForm("init_p is not a product of constants, intervals and gauss factors")
        if br.const < 0:
            raise UnrecognizedInitForm("negative constant in init_p")
        for f in spec.real_fluents:
            lo, hi = br.interval(f.name)
            if f.name not in br.gauss and not (math.isfinite(lo) and math.isfinite(hi)):
                raise UnrecognizedInitForm(f"fluent {f.name} has no bounded proposal")
    for i, a in enumerate(brs):
        for b in brs[i + 1:]:
            if _overlap(a, b, spec):
                raise UnrecognizedInitForm("init_p cases overlap")
    return brs


def support_box(spec: TheorySpec, trunc_sigmas: float) -> dict[str, tuple[float, float]]:
    """Bounding interval of every real fluent over the support of ``init_p``."""
    brs = init_branches(spec)
    box: dict[str, tuple[float, float]] = {}
    for f in spec.real_fluents:
        lo, hi = math.inf, -math.inf
        for br in brs:
            blo, bhi = br.interval(f.name)
            if f.name in br.gauss:
                m, var = br.gauss[f.name]
                sd = math.sqrt(var)
                blo, bhi = max(blo, m - trunc_sigmas * sd), min(bhi, m + trunc_sigmas * sd)
            if not (math.isfinite(blo) and math.isfinite(bhi)):
                raise UnboundedSupport(f"cannot bound fluent {f.name} in the support of init_p")
            if blo < bhi:
                lo, hi = min(lo, blo), max(hi, bhi)
        if not lo < hi:
            lo, hi = 0.0, 0.0
        box[f.name] = (lo, hi)
    return box


def init_form(spec: TheorySpec) -> str:
    """``'sampled'`` if exact sampling applies, ``'grid-only'`` otherwise."""
    try:
        decompose_init(spec)
    except UnrecognizedInitForm:
        return "grid-only"
    return "sampled"


def outcome_gauss(decl: ActionDecl, param: str) -> Gauss:
    """The single gauss atom of the likelihood that mentions continuous actual ``param``."""
    hits = [g for g in walk(decl.likelihood) if isinstance(g, Gauss)
            and any(isinstance(n, ParamRef) and n.name == param for n in walk(g))]
    if len(hits) != 1:
        raise UnrecognizedLikelihoodForm(
            f"likelihood of {decl.name} must contain exactly one gauss atom in {param}, found {len(hits)}"
        )
    g = hits[0]
    if any(isinstance(n, ParamRef) and n.name == param for n in walk(g.var)):
        raise UnrecognizedLikelihoodForm(f"variance of the {param} gauss in {decl.name} depends on {param}")
    return g


__all__ = [
    "InitBranch",
    "affine_coeffs",
    "decompose_init",
    "init_branches",
    "init_form",
    "outcome_gauss",
    "support_box",
]
