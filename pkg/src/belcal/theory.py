"""Parsed basic action theories, ground actions and queries."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .errors import Span
from .expr import REAL, TRUE, Const, Domain, Expr, FiniteDomain, Formula, RealDomain, Value

DETERMINISTIC = "deterministic"
SENSING = "sensing"
NOISY = "noisy"


@dataclass(frozen=True)
class FluentDecl:
    name: str
    domain: Domain
    span: Span | None = field(default=None, compare=False, repr=False)

    @property
    def is_real(self) -> bool:
        return isinstance(self.domain, RealDomain)


@dataclass(frozen=True)
class ParamDecl:
    name: str
    domain: Domain

    @property
    def is_real(self) -> bool:
        return isinstance(self.domain, RealDomain)


@dataclass(frozen=True)
class ActionDecl:
    name: str
    nominal_params: tuple[ParamDecl, ...]
    actual_params: tuple[ParamDecl, ...] = ()
    kind: str = DETERMINISTIC
    precondition: Formula = TRUE
    likelihood: Expr = Const(1.0)
    ssa: Mapping[str, Expr] = field(default_factory=dict)
    span: Span | None = field(default=None, compare=False, repr=False)
    ssa_spans: Mapping[str, Span] = field(default_factory=dict, compare=False, repr=False)
    likelihood_span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ssa", MappingProxyType(dict(self.ssa)))

    def __hash__(self) -> int:
        return hash((self.name, self.nominal_params, self.actual_params, self.kind))

    @property
    def params(self) -> tuple[ParamDecl, ...]:
        return self.nominal_params + self.actual_params


@dataclass(frozen=True)
class TheorySpec:
    name: str
    fluents: tuple[FluentDecl, ...]
    actions: tuple[ActionDecl, ...]
    init_p: Expr
    config: Mapping[str, str] = field(default_factory=dict)
    init_span: Span | None = field(default=None, compare=False, repr=False)
    source: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "config", MappingProxyType(dict(self.config)))

    def __hash__(self) -> int:
        return hash((self.name, self.fluents, self.actions))

    @property
    def fluent_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fluents)

    def fluent(self, name: str) -> FluentDecl:
        for f in self.fluents:
            if f.name == name:
                return f
        raise KeyError(name)

    def action(self, name: str) -> ActionDecl:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def has_action(self, name: str) -> bool:
        return any(a.name == name for a in self.actions)

    @property
    def real_fluents(self) -> tuple[FluentDecl, ...]:
        return tuple(f for f in self.fluents if f.is_real)

    @property
    def finite_fluents(self) -> tuple[FluentDecl, ...]:
        return tuple(f for f in self.fluents if not f.is_real)


@dataclass(frozen=True)
class GroundAction:
    name: str
    nominal_args: tuple[Value, ...] = ()
    actual_args: tuple[Value, ...] | None = None

    def __str__(self) -> str:
        def fmt(v: Value) -> str:
            return str(v) if isinstance(v, str) else repr(v)

        inner = ", ".join(fmt(v) for v in self.nominal_args)
        if self.actual_args:
            inner += " ~ " + ", ".join(fmt(v) for v in self.actual_args)
        return f"{self.name}({inner})"


BEL = "bel"
KNOWS = "knows"
MARGINAL = "marginal"


@dataclass(frozen=True)
class Query:
    kind: str
    alpha: tuple[GroundAction, ...]
    formula: Formula | None = None
    fluent: str | None = None
    bins: int = 50
    range: tuple[float, float] | None = None
    options: Mapping[str, str] = field(default_factory=dict)
    text: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", MappingProxyType(dict(self.options)))


__all__ = [
    "REAL",
    "FiniteDomain",
    "FluentDecl",
    "ParamDecl",
    "ActionDecl",
    "TheorySpec",
    "GroundAction",
    "Query",
    "DETERMINISTIC",
    "SENSING",
    "NOISY",
    "BEL",
    "KNOWS",
    "MARGINAL",
]
