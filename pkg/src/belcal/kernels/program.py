"""Lowering of expression trees to column programs.

A program evaluates one expression or formula at many points at once.  Fluent
and parameter references are bound either to a constant (nominal arguments) or
to an input column; symbols become their integer codes.  The lowered tree is
kept as nested tuples for the numpy evaluator, and flattened to a stack
bytecode with forward jumps for the compiled kernel.
"""

from __future__ import annotations

import math
from typing import Callable, Hashable

import numpy as np

from ..errors import EvaluationError
from ..expr import (
    And,
    Binary,
    BoolConst,
    Cases,
    Compare,
    Const,
    FluentRef,
    Gauss,
    Implies,
    Node,
    Not,
    Or,
    ParamRef,
    Sym,
    Unary,
)

# opcodes; keep in sync with _ckernel.pyx
LOAD, CONST = 0, 1
NEG, ABS, ADD, SUB, MUL, DIV, MIN, MAX, GAUSS = range(2, 11)
EQ, NE, LT, LE, GT, GE, EQS, NES, NOT = range(11, 20)
JIF, JMP, JFOP, JTOP = range(20, 24)

_BINOPS = {"+": ADD, "-": SUB, "*": MUL, "/": DIV, "min": MIN, "max": MAX}
_CMPOPS = {"=": EQ, "!=": NE, "<": LT, "<=": LE, ">": GT, ">=": GE}

# error codes reported by both kernels
ERR_DIV0, ERR_VAR, ERR_NONFINITE = 1, 2, 3

Binding = Callable[[Node], "float | Sym | tuple[str, Hashable]"]


class Program:
    """A compiled expression (``kind='real'``/``'sym'``) or formula (``kind='bool'``)."""

    def __init__(self, ir, inputs: list[Hashable], kind: str, source: Node | None = None):
        self.ir = ir
        self.inputs = inputs
        self.kind = kind
        self.source = source
        ops, args, consts = [], [], []
        _emit(ir, ops, args, consts)
        self.ops = np.asarray(ops, dtype=np.int32)
        self.args = np.asarray(args, dtype=np.int32)
        self.consts = np.asarray(consts, dtype=np.float64)
        self.stack_size = _depth(ir) + 2

    @property
    def is_constant(self) -> bool:
        return self.ir[0] in ("const", "bool")

    def __repr__(self) -> str:
        return f"Program(kind={self.kind}, inputs={self.inputs}, ops={len(self.ops)})"


def compile_node(node: Node, bind: Binding, is_sym: Callable[[Node], bool]) -> Program:
    """Lower ``node``. ``bind`` maps each FluentRef/ParamRef to a value or ``('col', key)``."""
    inputs: list[Hashable] = []
    index: dict[Hashable, int] = {}

    def col(key: Hashable) -> int:
        if key not in index:
            index[key] = len(inputs)
            inputs.append(key)
        return index[key]

    def lower(n: Node):
        if isinstance(n, Const):
            return ("const", _num(n.value))
        if isinstance(n, (FluentRef, ParamRef)):
            b = bind(n)
            if isinstance(b, tuple):
                return ("col", col(b[1]))
            return ("const", _num(b))
        if isinstance(n, Unary):
            return _fold((n.op, lower(n.arg)))
        if isinstance(n, Binary):
            return _fold((n.op, lower(n.left), lower(n.right)))
        if isinstance(n, Gauss):
            return _fold(("gauss", lower(n.arg), lower(n.mean), lower(n.var)))
        if isinstance(n, Cases):
            branches = []
            for g, v in n.branches:
                lg = lower(g)
                if lg == ("bool", False):
                    continue
                if lg == ("bool", True):
                    return lower(v) if not branches else ("cases", tuple(branches), lower(v))
                branches.append((lg, lower(v)))
            d = lower(n.default)
            return ("cases", tuple(branches), d) if branches else d
        if isinstance(n, Compare):
            sym = is_sym(n.left) or is_sym(n.right)
            return _fold(("cmp", n.op, lower(n.left), lower(n.right), sym))
        if isinstance(n, And):
            return _fold_logic("and", lower(n.left), lower(n.right))
        if isinstance(n, Or):
            return _fold_logic("or", lower(n.left), lower(n.right))
        if isinstance(n, Implies):
            return _fold_logic("or", _fold(("not", lower(n.left))), lower(n.right))
        if isinstance(n, Not):
            return _fold(("not", lower(n.arg)))
        if isinstance(n, BoolConst):
            return ("bool", bool(n.value))
        raise TypeError(f"cannot compile {n!r}")

    ir = lower(node)
    if isinstance(node, (Compare, And, Or, Implies, Not, BoolConst)):
        kind = "bool"
    else:
        kind = "sym" if is_sym(node) else "real"
    return Program(ir, inputs, kind, node)


def _num(v) -> float:
    if isinstance(v, Sym):
        return float(v.code)
    return float(v)


def _fold(ir):
    """Evaluate ``ir`` now when every operand is constant and evaluation succeeds."""
    tag = ir[0]
    operands = ir[2:4] if tag == "cmp" else ir[1:]
    if not all(o[0] in ("const", "bool") for o in operands):
        return ir
    try:
        v = scalar_eval(ir, ())
    except EvaluationError:
        return ir
    return ("bool", bool(v)) if tag in ("cmp", "not") else ("const", float(v))


def _fold_logic(tag: str, a, b):
    if a[0] == "bool":
        if tag == "and":
            return b if a[1] else a
        return a if a[1] else b
    if b[0] == "bool" and b[1] == (tag == "and"):
        return a
    return (tag, a, b)


def _depth(ir) -> int:
    tag = ir[0]
    if tag in ("col", "const", "bool"):
        return 1
    if tag in ("neg", "abs", "not"):
        return _depth(ir[1])
    if tag == "cmp":
        return max(_depth(ir[2]), 1 + _depth(ir[3]))
    if tag == "gauss":
        return max(_depth(ir[1]), 1 + _depth(ir[2]), 2 + _depth(ir[3]))
    if tag == "cases":
        d = _depth(ir[2])
        for g, v in ir[1]:
            d = max(d, _depth(g), _depth(v))
        return d
    if tag in ("and", "or"):
        return max(_depth(ir[1]), _depth(ir[2]))
    return max(_depth(ir[1]), 1 + _depth(ir[2]))


def _emit(ir, ops: list, args: list, consts: list) -> None:
    def op(code: int, arg: int = 0) -> int:
        ops.append(code)
        args.append(arg)
        return len(ops) - 1

    tag = ir[0]
    if tag == "col":
        op(LOAD, ir[1])
    elif tag in ("const", "bool"):
        consts.append(float(ir[1]))
        op(CONST, len(consts) - 1)
    elif tag == "neg":
        _emit(ir[1], ops, args, consts)
        op(NEG)
    elif tag == "abs":
        _emit(ir[1], ops, args, consts)
        op(ABS)
    elif tag == "not":
        _emit(ir[1], ops, args, consts)
        op(NOT)
    elif tag in _BINOPS:
        _emit(ir[1], ops, args, consts)
        _emit(ir[2], ops, args, consts)
        op(_BINOPS[tag])
    elif tag == "gauss":
        for sub in ir[1:]:
            _emit(sub, ops, args, consts)
        op(GAUSS)
    elif tag == "cmp":
        _, cmp, a, b, sym = ir
        _emit(a, ops, args, consts)
        _emit(b, ops, args, consts)
        if sym:
            op(EQS if cmp == "=" else NES)
        else:
            op(_CMPOPS[cmp])
    elif tag in ("and", "or"):
        _emit(ir[1], ops, args, consts)
        j = op(JFOP if tag == "and" else JTOP)
        _emit(ir[2], ops, args, consts)
        args[j] = len(ops)
    elif tag == "cases":
        ends = []
        for g, v in ir[1]:
            _emit(g, ops, args, consts)
            skip = op(JIF)
            _emit(v, ops, args, consts)
            ends.append(op(JMP))
            args[skip] = len(ops)
        _emit(ir[2], ops, args, consts)
        for j in ends:
            args[j] = len(ops)
    else:
        raise ValueError(f"unknown IR tag {tag!r}")


_SQRT_2PI = math.sqrt(2.0 * math.pi)


def scalar_eval(ir, row, eps: float = 0.0):
    """Reference evaluation of lowered IR at one row (used for folding and tests)."""
    from ..errors import DivisionByZero, NonFiniteValue, NonPositiveVariance

    tag = ir[0]
    if tag == "col":
        return row[ir[1]]
    if tag in ("const", "bool"):
        return ir[1]
    if tag == "neg":
        return -scalar_eval(ir[1], row, eps)
    if tag == "abs":
        return abs(scalar_eval(ir[1], row, eps))
    if tag == "not":
        return not scalar_eval(ir[1], row, eps)
    if tag == "and":
        return bool(scalar_eval(ir[1], row, eps)) and bool(scalar_eval(ir[2], row, eps))
    if tag == "or":
        return bool(scalar_eval(ir[1], row, eps)) or bool(scalar_eval(ir[2], row, eps))
    if tag == "cases":
        for g, v in ir[1]:
            if scalar_eval(g, row, eps):
                return scalar_eval(v, row, eps)
        return scalar_eval(ir[2], row, eps)
    if tag == "cmp":
        _, cmp, a, b, sym = ir
        x, y = scalar_eval(a, row, eps), scalar_eval(b, row, eps)
        if cmp == "=":
            return x == y or (not sym and abs(x - y) <= eps)
        if cmp == "!=":
            return not (x == y or (not sym and abs(x - y) <= eps))
        return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[cmp]
    if tag == "gauss":
        x, m, v = (scalar_eval(s, row, eps) for s in ir[1:])
        if not v > 0.0:
            raise NonPositiveVariance(f"gauss variance must be positive, got {v}")
        d = x - m
        r = math.exp(-(d * d) / (2.0 * v)) / (_SQRT_2PI * math.sqrt(v))
    else:
        a, b = scalar_eval(ir[1], row, eps), scalar_eval(ir[2], row, eps)
        if tag == "/":
            if b == 0.0:
                raise DivisionByZero("division by zero")
            r = a / b
        else:
            r = {"+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
                 "min": lambda: min(a, b), "max": lambda: max(a, b)}[tag]()
    if not math.isfinite(r):
        raise NonFiniteValue(f"{tag} produced {r}")
    return r
