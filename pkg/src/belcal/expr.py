"""Expression and formula trees plus the scalar evaluator.

Values are either Python floats (real fluents and parameters) or :class:`Sym`
instances (members of a declared finite domain).  Every node is an immutable
dataclass, so trees can be shared freely between threads.
"""

from __future__ import annotations

import math
import threading
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Union

from .errors import (
    DivisionByZero,
    HistoryIndexOutOfRange,
    NonFiniteValue,
    NonPositiveVariance,
    TypeMismatch,
    UnboundReference,
)
from .errors import Span

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Sym(str):
    """A symbolic constant. Interned, so equal symbols are identical objects."""

    __slots__ = ()
    _table: dict[str, "Sym"] = {}
    _codes: dict[str, int] = {}
    _by_code: list["Sym"] = []
    _lock = threading.Lock()

    def __new__(cls, name: str) -> "Sym":
        name = str(name)
        found = cls._table.get(name)
        if found is not None:
            return found
        with cls._lock:
            found = cls._table.get(name)
            if found is None:
                found = super().__new__(cls, name)
                cls._table[name] = found
                cls._codes[name] = len(cls._by_code)
                cls._by_code.append(found)
            return found

    def __repr__(self) -> str:
        return f"Sym({str.__repr__(self)})"

    def __reduce__(self):
        return (Sym, (str(self),))

    @property
    def code(self) -> int:
        """Dense integer id used by the array kernels."""
        return Sym._codes[str(self)]

    @classmethod
    def from_code(cls, code: float) -> "Sym":
        return cls._by_code[int(code)]


Value = Union[float, Sym]


def is_sym(v: object) -> bool:
    return isinstance(v, Sym)


# -- domains -----------------------------------------------------------------

@dataclass(frozen=True)
class RealDomain:
    def __contains__(self, v: object) -> bool:
        return isinstance(v, float) and math.isfinite(v)

    def __str__(self) -> str:
        return "real"


@dataclass(frozen=True)
class FiniteDomain:
    values: tuple[Sym, ...]

    def __contains__(self, v: object) -> bool:
        return isinstance(v, Sym) and v in self.values

    def __str__(self) -> str:
        return "{ " + ", ".join(self.values) + " }"


REAL = RealDomain()
Domain = Union[RealDomain, FiniteDomain]


# -- expressions ---------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: Value
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class FluentRef:
    name: str
    at: int | None = None
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ParamRef:
    name: str
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" | "abs"
    arg: "Expr"
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Binary:
    op: str  # "+", "-", "*", "/", "min", "max"
    left: "Expr"
    right: "Expr"
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Gauss:
    """Normal density N(arg; mean, variance)."""

    arg: "Expr"
    mean: "Expr"
    var: "Expr"
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Cases:
    branches: tuple[tuple["Formula", "Expr"], ...]
    default: "Expr"
    span: Span | None = field(default=None, compare=False, repr=False)


Expr = Union[Const, FluentRef, ParamRef, Unary, Binary, Gauss, Cases]


# -- formulas ------------------------------------------------------------------

COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Compare:
    op: str
    left: Expr
    right: Expr
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Not:
    arg: "Formula"
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BoolConst:
    value: bool
    span: Span | None = field(default=None, compare=False, repr=False)


TRUE = BoolConst(True)
FALSE = BoolConst(False)

Formula = Union[Compare, And, Or, Not, Implies, BoolConst]
Node = Union[Expr, Formula]


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, (Const, FluentRef, ParamRef, BoolConst)):
        return ()
    if isinstance(node, (Unary, Not)):
        return (node.arg,)
    if isinstance(node, (Binary, Compare, And, Or, Implies)):
        return (node.left, node.right)
    if isinstance(node, Gauss):
        return (node.arg, node.mean, node.var)
    if isinstance(node, Cases):
        out: list[Node] = []
        for guard, value in node.branches:
            out += [guard, value]
        out.append(node.default)
        return tuple(out)
    raise TypeError(f"not an expression node: {node!r}")


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal."""
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(children(cur)))


def fluent_refs(node: Node) -> set[FluentRef]:
    return {n for n in walk(node) if isinstance(n, FluentRef)}


def param_names(node: Node) -> set[str]:
    return {n.name for n in walk(node) if isinstance(n, ParamRef)}


def is_ground(node: Node) -> bool:
    """True when the node mentions no fluent and no parameter."""
    return not any(isinstance(n, (FluentRef, ParamRef)) for n in walk(node))


# -- world points and environments ----------------------------------------------

class WorldPoint(Mapping):
    """Immutable fluent-name to value mapping, ordered as the fluents were declared."""

    __slots__ = ("_names", "_values", "_index")

    def __init__(self, names: Sequence[str], values: Sequence[Value]):
        if len(names) != len(values):
            raise ValueError("names and values differ in length")
        self._names = tuple(names)
        self._values = tuple(values)
        self._index = {n: i for i, n in enumerate(self._names)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Value]) -> "WorldPoint":
        return cls(list(d.keys()), list(d.values()))

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def values_tuple(self) -> tuple[Value, ...]:
        return self._values

    def __getitem__(self, name: str) -> Value:
        return self._values[self._index[name]]

    def __iter__(self):
        return iter(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def replace(self, updates: Mapping[str, Value]) -> "WorldPoint":
        vals = list(self._values)
        for k, v in updates.items():
            vals[self._index[k]] = v
        return WorldPoint(self._names, vals)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, WorldPoint):
            return self._names == other._names and self._values == other._values
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self._names, self._values))

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}={v!r}" for n, v in zip(self._names, self._values))
        return f"WorldPoint({inner})"


@dataclass(frozen=True)
class Env:
    trajectory: Sequence[WorldPoint]
    params: Mapping[str, Value] = field(default_factory=dict)
    now_index: int | None = None
    eps: float = 0.0

    @property
    def now(self) -> int:
        return len(self.trajectory) - 1 if self.now_index is None else self.now_index


def point_env(w: WorldPoint, params: Mapping[str, Value] | None = None, eps: float = 0.0) -> Env:
    return Env((w,), params or {}, 0, eps)


# -- scalar evaluation ---------------------------------------------------------------

def _real(v: Value, what: str) -> float:
    if isinstance(v, Sym):
        raise TypeMismatch(f"{what} expects a real, got symbol {v}")
    return v


def _finite(x: float, what: str) -> float:
    if not math.isfinite(x):
        raise NonFiniteValue(f"{what} produced {x}")
    return x


def gauss_density(x: float, mean: float, var: float) -> float:
    if not var > 0.0:
        raise NonPositiveVariance(f"gauss variance must be positive, got {var}")
    d = x - mean
    return math.exp(-(d * d) / (2.0 * var)) / (_SQRT_2PI * math.sqrt(var))


def eval_expr(e: Expr, env: Env) -> Value:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, FluentRef):
        k = env.now if e.at is None else e.at
        if not 0 <= k < len(env.trajectory):
            raise HistoryIndexOutOfRange(f"{e.name}@{k}: trajectory has {len(env.trajectory)} points")
        try:
            return env.trajectory[k][e.name]
        except KeyError:
            raise UnboundReference(f"fluent {e.name!r} is not bound") from None
    if isinstance(e, ParamRef):
        try:
            return env.params[e.name]
        except KeyError:
            raise UnboundReference(f"parameter {e.name!r} is not bound") from None
    if isinstance(e, Unary):
        a = _real(eval_expr(e.arg, env), e.op)
        return -a if e.op == "neg" else abs(a)
    if isinstance(e, Binary):
        a = _real(eval_expr(e.left, env), e.op)
        b = _real(eval_expr(e.right, env), e.op)
        op = e.op
        if op == "+":
            r = a + b
        elif op == "-":
            r = a - b
        elif op == "*":
            r = a * b
        elif op == "/":
            if b == 0.0:
                raise DivisionByZero(f"division of {a} by zero")
            r = a / b
        elif op == "min":
            r = min(a, b)
        elif op == "max":
            r = max(a, b)
        else:
            raise ValueError(f"unknown operator {op!r}")
        return _finite(r, op)
    if isinstance(e, Gauss):
        x = _real(eval_expr(e.arg, env), "gauss")
        m = _real(eval_expr(e.mean, env), "gauss")
        v = _real(eval_expr(e.var, env), "gauss")
        return _finite(gauss_density(x, m, v), "gauss")
    if isinstance(e, Cases):
        for guard, value in e.branches:
            if eval_formula(guard, env):
                return eval_expr(value, env)
        return eval_expr(e.default, env)
    raise TypeError(f"not an expression: {e!r}")


def compare_values(op: str, a: Value, b: Value, eps: float = 0.0) -> bool:
    if isinstance(a, Sym) or isinstance(b, Sym):
        if not (isinstance(a, Sym) and isinstance(b, Sym)):
            raise TypeMismatch(f"cannot compare {a!r} with {b!r}")
        if op == "=":
            return a is b
        if op == "!=":
            return a is not b
        raise TypeMismatch(f"ordering comparison {op} on symbols")
    if op == "=":
        return a == b or abs(a - b) <= eps
    if op == "!=":
        return not (a == b or abs(a - b) <= eps)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(f"unknown comparison {op!r}")


def eval_formula(f: Formula, env: Env) -> bool:
    if isinstance(f, Compare):
        return compare_values(f.op, eval_expr(f.left, env), eval_expr(f.right, env), env.eps)
    if isinstance(f, And):
        return eval_formula(f.left, env) and eval_formula(f.right, env)
    if isinstance(f, Or):
        return eval_formula(f.left, env) or eval_formula(f.right, env)
    if isinstance(f, Not):
        return not eval_formula(f.arg, env)
    if isinstance(f, Implies):
        return (not eval_formula(f.left, env)) or eval_formula(f.right, env)
    if isinstance(f, BoolConst):
        return f.value
    raise TypeError(f"not a formula: {f!r}")


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]
