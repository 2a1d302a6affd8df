"""Scalar simulation of world points under fully-ground actions."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from .errors import ArityMismatch, BelcalError, DomainMismatch, DomainViolation, NegativeLikelihood, SimulationError
from .expr import Env, FiniteDomain, Sym, Value, WorldPoint, eval_expr, eval_formula, point_env
from .theory import ActionDecl, GroundAction, TheorySpec


def _decl(spec: TheorySpec, a: GroundAction) -> ActionDecl:
    try:
        return spec.action(a.name)
    except KeyError:
        raise BelcalError(f"unknown action {a.name!r}") from None


def bind_params(decl: ActionDecl, a: GroundAction) -> dict[str, Value]:
    """Parameter bindings for a fully-ground action (actual args required when declared)."""
    if len(a.nominal_args) != len(decl.nominal_params):
        raise ArityMismatch(f"{a.name} takes {len(decl.nominal_params)} nominal argument(s)")
    actual = a.actual_args or ()
    if len(actual) != len(decl.actual_params):
        raise ArityMismatch(
            f"{a.name} needs {len(decl.actual_params)} actual argument(s) to be simulated, got {len(actual)}"
        )
    params = {p.name: v for p, v in zip(decl.nominal_params, a.nominal_args)}
    params.update({p.name: v for p, v in zip(decl.actual_params, actual)})
    return params


def progress(spec: TheorySpec, w: WorldPoint, a: GroundAction, eps: float = 0.0) -> WorldPoint:
    """Successor of ``w`` under ``a``. All right-hand sides read the pre-state."""
    decl = _decl(spec, a)
    if not decl.ssa:
        return w
    env = point_env(w, bind_params(decl, a), eps)
    updates: dict[str, Value] = {}
    for fluent, rhs in decl.ssa.items():
        val = eval_expr(rhs, env)
        dom = spec.fluent(fluent).domain
        if isinstance(dom, FiniteDomain) and val not in dom:
            raise DomainViolation(f"{a.name} sets {fluent} to {val!r}, outside {dom}")
        updates[fluent] = val
    return w.replace(updates)


def poss(spec: TheorySpec, w: WorldPoint, a: GroundAction, eps: float = 0.0) -> bool:
    decl = _decl(spec, a)
    return eval_formula(decl.precondition, point_env(w, bind_params(decl, a), eps))


def likelihood(spec: TheorySpec, w: WorldPoint, a: GroundAction, eps: float = 0.0) -> float:
    decl = _decl(spec, a)
    u = eval_expr(decl.likelihood, point_env(w, bind_params(decl, a), eps))
    if isinstance(u, str):
        raise DomainViolation(f"likelihood of {a.name} is symbolic")
    if u < 0.0:
        raise NegativeLikelihood(f"likelihood of {a} is {u} < 0")
    return u


def ground_alt(spec: TheorySpec, a: GroundAction, outcome: Sequence[Value]) -> GroundAction:
    """The alternative of intended action ``a`` whose actual arguments are ``outcome``."""
    decl = _decl(spec, a)
    if len(outcome) != len(decl.actual_params):
        raise ArityMismatch(f"{a.name} has {len(decl.actual_params)} actual parameter(s), got {len(outcome)}")
    for p, v in zip(decl.actual_params, outcome):
        if v not in p.domain:
            raise DomainMismatch(f"outcome {v!r} is not in the domain of {a.name}.{p.name}")
    return GroundAction(a.name, a.nominal_args, tuple(outcome))


@dataclass(frozen=True)
class Trajectory:
    points: tuple[WorldPoint, ...]
    actions: tuple[GroundAction, ...]
    inexecutable_at: int | None = None

    @property
    def executable(self) -> bool:
        return self.inexecutable_at is None

    @property
    def final(self) -> WorldPoint:
        return self.points[-1]

    def env(self, eps: float = 0.0) -> Env:
        return Env(self.points, {}, len(self.points) - 1, eps)


def simulate(spec: TheorySpec, w0: WorldPoint, beta: Sequence[GroundAction], eps: float = 0.0) -> Trajectory:
    points = [w0]
    done: list[GroundAction] = []
    for k, a in enumerate(beta):
        try:
            if not poss(spec, points[-1], a, eps):
                return Trajectory(tuple(points), tuple(done), k)
            points.append(progress(spec, points[-1], a, eps))
        except BelcalError as err:
            raise SimulationError(k, err) from err
        done.append(a)
    return Trajectory(tuple(points), tuple(done))


def world_point(spec: TheorySpec, values: Mapping[str, Value]) -> WorldPoint:
    """Build a point in declaration order, coercing numbers and symbols to their domains."""
    vals: list[Value] = []
    for f in spec.fluents:
        v = values[f.name]
        if isinstance(f.domain, FiniteDomain):
            v = Sym(str(v))
            if v not in f.domain:
                raise DomainMismatch(f"{v} is not in the domain of {f.name}")
        else:
            v = float(v)
        vals.append(v)
    return WorldPoint(spec.fluent_names, vals)
