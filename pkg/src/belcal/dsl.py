"""Recursive-descent parser and pretty-printer for theory and query files.

Theory files look like::

    theory robot1d
    fluent h : real
    init p = cases { 0.1 if 2 <= h and h <= 12 ; 0 }
    action move(x: real) { h' = max(0, h - x) }
    action nmove(x: real ~ y: real) { likelihood = gauss(y - x; 0, 1)  h' = max(0, h - y) }
    action sonar(z: real) sensing { likelihood = gauss(z - h; 0, 4) }

Queries are single lines: ``bel <formula> after [a(1), b(2 ~ 2.1)]``,
``knows <formula> after [...]`` or
``marginal <fluent> after [...] bins=<n> range=<lo>,<hi>``.

Parsing happens in two passes.  The first builds a raw tree in which names and
numerals are unresolved; the second resolves names against the declarations
and decides, from context, whether a numeral such as ``0`` denotes a real or a
member of a finite domain.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import (
    ArityMismatch,
    Diagnostic,
    DomainMismatch,
    DslSyntaxError,
    DuplicateName,
    Span,
    StaticTypeError,
    TheoryError,
    UnknownIdentifier,
)
from .expr import (
    REAL,
    And,
    Binary,
    BoolConst,
    Cases,
    Compare,
    Const,
    Domain,
    Expr,
    FiniteDomain,
    FluentRef,
    Formula,
    Gauss,
    Implies,
    Not,
    Or,
    ParamRef,
    RealDomain,
    Sym,
    Unary,
)
from .theory import (
    BEL,
    DETERMINISTIC,
    KNOWS,
    MARGINAL,
    NOISY,
    SENSING,
    ActionDecl,
    FluentDecl,
    GroundAction,
    ParamDecl,
    Query,
    TheorySpec,
)

KEYWORDS = frozenset(
    """theory fluent init action sensing likelihood poss after bel knows marginal
    cases if gauss min max abs and or not implies true false real config""".split()
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|!=|==|->|≤|≥|≠|[-+*/(){}\[\],;:~@=<>'])
    """,
    re.VERBOSE,
)

_UNICODE_OPS = {"≤": "<=", "≥": ">=", "≠": "!=", "==": "="}


@dataclass(frozen=True)
class Token:
    kind: str  # "num" | "ident" | "op" | "eof"
    text: str
    span: Span


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", Span(line, col, col + 1))
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("num", "ident", "op"):
            tok = _UNICODE_OPS.get(tok, tok)
            tokens.append(Token(kind, tok, Span(line, col, col + len(m.group()))))
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1)))
    return tokens


# -- raw tree ----------------------------------------------------------------------
# Only names and numerals differ from the resolved tree.

@dataclass(frozen=True)
class RawName:
    name: str
    at: int | None
    span: Span


@dataclass(frozen=True)
class RawNum:
    text: str
    span: Span


@dataclass
class RawAction:
    name: str
    nominal: list[tuple[str, Domain, Span]]
    actual: list[tuple[str, Domain, Span]]
    sensing: bool
    items: list[tuple[str, str | None, object, Span]]  # (kind, fluent, raw tree, span)
    span: Span


@dataclass
class RawGround:
    name: str
    nominal: list[tuple[str, Span]]
    actual: list[tuple[str, Span]] | None
    span: Span


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text in texts

    def fail(self, expected: Iterable[str]) -> DslSyntaxError:
        exp = frozenset(expected)
        got = self.tok.text or "end of input"
        return DslSyntaxError(
            f"expected {' or '.join(sorted(exp))}, found {got!r}", self.tok.span, exp
        )

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.fail([text])
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.fail([what])
        self.i += 1
        return t

    # -- theory ---------------------------------------------------------------

    def theory(self):
        if self.tok.kind == "eof":
            raise DslSyntaxError("empty theory", self.tok.span, frozenset({"theory"}))
        self.expect("theory")
        name = self.ident("theory name").text
        fluents: list[tuple[str, Domain, Span]] = []
        actions: list[RawAction] = []
        inits: list[tuple[object, Span]] = []
        config: list[tuple[str, str, Span]] = []
        while self.tok.kind != "eof":
            if self.at("fluent"):
                start = self.expect("fluent").span
                nm = self.ident("fluent name")
                self.expect(":")
                fluents.append((nm.text, self.domain(), nm.span))
            elif self.at("init"):
                start = self.expect("init").span
                if not (self.tok.kind == "ident" and self.tok.text == "p"):
                    raise self.fail(["p"])
                self.i += 1
                self.expect("=")
                inits.append((self.expr(), start))
            elif self.at("action"):
                actions.append(self.action())
            elif self.at("config"):
                start = self.expect("config").span
                key = self.ident("config key").text
                self.expect("=")
                config.append((key, self.option_value(), start))
            else:
                raise self.fail(["fluent", "init", "action", "config"])
        return name, fluents, actions, inits, config

    def domain(self) -> Domain:
        if self.accept("real"):
            return REAL
        self.expect("{")
        vals = [self.domain_atom()]
        while self.accept(","):
            vals.append(self.domain_atom())
        self.expect("}")
        if len(set(vals)) != len(vals):
            raise DuplicateName("finite domain lists a value twice", self.tok.span)
        return FiniteDomain(tuple(Sym(v) for v in vals))

    def domain_atom(self) -> str:
        t = self.tok
        if t.kind == "num" or (t.kind == "ident" and t.text not in KEYWORDS):
            self.i += 1
            return t.text
        raise self.fail(["domain value"])

    def params(self, closers: tuple[str, ...]) -> list[tuple[str, Domain, Span]]:
        out: list[tuple[str, Domain, Span]] = []
        if self.at(*closers):
            return out
        while True:
            nm = self.ident("parameter name")
            self.expect(":")
            out.append((nm.text, self.domain(), nm.span))
            if not self.accept(","):
                return out

    def action(self) -> RawAction:
        start = self.expect("action").span
        name = self.ident("action name").text
        self.expect("(")
        nominal = self.params((")", "~"))
        actual: list[tuple[str, Domain, Span]] = []
        if self.accept("~"):
            actual = self.params((")",))
        self.expect(")")
        sensing = self.accept("sensing")
        self.expect("{")
        items = []
        while not self.at("}"):
            if self.accept(";"):
                continue
            span = self.tok.span
            if self.accept("likelihood"):
                self.expect("=")
                items.append(("likelihood", None, self.expr(), span))
            elif self.accept("poss"):
                self.expect("=")
                items.append(("poss", None, self.formula(), span))
            elif self.tok.kind == "ident" and self.tok.text not in KEYWORDS:
                fl = self.ident().text
                self.expect("'")
                self.expect("=")
                items.append(("ssa", fl, self.expr(), span))
            else:
                raise self.fail(["likelihood", "poss", "<fluent>'", "}"])
        self.expect("}")
        return RawAction(name, nominal, actual, sensing, items, start)

    def option_value(self) -> str:
        t = self.tok
        neg = ""
        if t.kind == "op" and t.text == "-":
            self.i += 1
            neg = "-"
            t = self.tok
        if t.kind in ("num", "ident"):
            self.i += 1
            return neg + t.text
        raise self.fail(["value"])

    # -- formulas -----------------------------------------------------------------

    def formula(self):
        left = self.disj()
        if self.accept("implies") or self.accept("->"):
            span = self.toks[self.i - 1].span
            return Implies(left, self.formula(), span)
        return left

    def disj(self):
        left = self.conj()
        while self.at("or"):
            span = self.expect("or").span
            left = Or(left, self.conj(), span)
        return left

    def conj(self):
        left = self.neg()
        while self.at("and"):
            span = self.expect("and").span
            left = And(left, self.neg(), span)
        return left

    def neg(self):
        if self.at("not"):
            span = self.expect("not").span
            return Not(self.neg(), span)
        return self.atom()

    def atom(self):
        if self.at("true"):
            return BoolConst(True, self.expect("true").span)
        if self.at("false"):
            return BoolConst(False, self.expect("false").span)
        if self.at("("):
            save = self.i
            try:
                return self.comparison()
            except DslSyntaxError:
                self.i = save
            self.expect("(")
            f = self.formula()
            self.expect(")")
            return f
        return self.comparison()

    def comparison(self):
        left = self.expr()
        ops = ("=", "!=", "<", "<=", ">", ">=")
        if not self.at(*ops):
            raise self.fail(ops)
        out = None
        while self.at(*ops):
            t = self.tok
            self.i += 1
            right = self.expr()
            cmp = Compare(t.text, left, right, t.span)
            out = cmp if out is None else And(out, cmp, t.span)
            left = right
        return out

    # -- expressions ------------------------------------------------------------

    def expr(self):
        left = self.term()
        while self.at("+", "-"):
            t = self.tok
            self.i += 1
            left = Binary(t.text, left, self.term(), t.span)
        return left

    def term(self):
        left = self.unary()
        while self.at("*", "/"):
            t = self.tok
            self.i += 1
            left = Binary(t.text, left, self.unary(), t.span)
        return left

    def unary(self):
        if self.at("-"):
            span = self.expect("-").span
            arg = self.unary()
            if isinstance(arg, RawNum):
                txt = arg.text[1:] if arg.text.startswith("-") else "-" + arg.text
                return RawNum(txt, span)
            return Unary("neg", arg, span)
        if self.at("+"):
            self.expect("+")
            return self.unary()
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return RawNum(t.text, t.span)
        if self.at("("):
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return e
        if self.at("min", "max"):
            self.i += 1
            self.expect("(")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            return Binary(t.text, a, b, t.span)
        if self.at("abs"):
            self.i += 1
            self.expect("(")
            a = self.expr()
            self.expect(")")
            return Unary("abs", a, t.span)
        if self.at("gauss"):
            self.i += 1
            self.expect("(")
            x = self.expr()
            self.expect(";")
            m = self.expr()
            self.expect(",")
            v = self.expr()
            self.expect(")")
            return Gauss(x, m, v, t.span)
        if self.at("cases"):
            return self.cases()
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.i += 1
            at = None
            if self.accept("@"):
                k = self.tok
                if k.kind != "num" or not k.text.isdigit():
                    raise self.fail(["history index"])
                self.i += 1
                at = int(k.text)
            return RawName(t.text, at, t.span)
        raise self.fail(["expression"])

    def cases(self):
        span = self.expect("cases").span
        self.expect("{")
        branches = []
        while True:
            value = self.expr()
            if self.accept("if"):
                guard = self.formula()
                branches.append((guard, value))
                self.expect(";")
                continue
            self.accept(";")
            self.expect("}")
            return Cases(tuple(branches), value, span)

    # -- queries --------------------------------------------------------------

    def query(self):
        if self.tok.kind == "eof":
            raise DslSyntaxError("empty query", self.tok.span, frozenset({"bel", "knows", "marginal"}))
        kind_tok = self.tok
        if self.accept("bel") or self.accept("knows"):
            formula = self.formula()
            fluent = None
        elif self.accept("marginal"):
            formula = None
            fluent = self.ident("fluent name")
        else:
            raise self.fail(["bel", "knows", "marginal"])
        self.expect("after")
        self.expect("[")
        alpha: list[RawGround] = []
        if not self.at("]"):
            alpha.append(self.ground())
            while self.accept(","):
                alpha.append(self.ground())
        self.expect("]")
        opts: dict[str, str] = {}
        while self.tok.kind == "ident":
            key = self.ident("option").text
            self.expect("=")
            val = self.option_value()
            if key == "range":
                self.expect(",")
                val = val + "," + self.option_value()
            opts[key] = val
        if self.tok.kind != "eof":
            raise self.fail(["option", "end of query"])
        return kind_tok.text, formula, fluent, alpha, opts

    def ground(self) -> RawGround:
        nm = self.ident("action name")
        self.expect("(")
        nominal = self.args((")", "~"))
        actual = None
        if self.accept("~"):
            actual = self.args((")",))
        self.expect(")")
        return RawGround(nm.text, nominal, actual, nm.span)

    def args(self, closers: tuple[str, ...]) -> list[tuple[str, Span]]:
        out: list[tuple[str, Span]] = []
        if self.at(*closers):
            return out
        while True:
            span = self.tok.span
            out.append((self.option_value(), span))
            if not self.accept(","):
                return out


# -- resolution ------------------------------------------------------------------

@dataclass
class _Scope:
    fluents: Mapping[str, FluentDecl]
    params: Mapping[str, Domain] = field(default_factory=dict)
    symbols: frozenset[str] = frozenset()
    allow_history: bool = False
    max_history: int | None = None


def _is_sym_type(t: Domain | None) -> bool:
    return isinstance(t, FiniteDomain)


class _Resolver:
    def check(self, node, expected: Domain, scope: _Scope) -> Expr:
        """Resolve ``node`` as an expression whose value must lie in ``expected``."""
        if isinstance(node, RawNum):
            return self._num(node, expected)
        if isinstance(node, RawName):
            e, t = self._name(node, scope, expected)
            self._agree(t, expected, node.span)
            return e
        if isinstance(node, Unary):
            self._need_real(expected, node.span)
            return Unary(node.op, self.check(node.arg, REAL, scope), node.span)
        if isinstance(node, Binary):
            self._need_real(expected, node.span)
            return Binary(node.op, self.check(node.left, REAL, scope), self.check(node.right, REAL, scope), node.span)
        if isinstance(node, Gauss):
            self._need_real(expected, node.span)
            return Gauss(
                self.check(node.arg, REAL, scope),
                self.check(node.mean, REAL, scope),
                self.check(node.var, REAL, scope),
                node.span,
            )
        if isinstance(node, Cases):
            branches = tuple((self.formula(g, scope), self.check(v, expected, scope)) for g, v in node.branches)
            return Cases(branches, self.check(node.default, expected, scope), node.span)
        raise StaticTypeError("expected an expression", getattr(node, "span", None))

    def infer(self, node, scope: _Scope) -> tuple[Expr, Domain | None]:
        """Resolve without an expected type. Returns ``None`` as type for bare numerals."""
        if isinstance(node, RawNum):
            return self._num(node, REAL), None
        if isinstance(node, RawName):
            return self._name(node, scope, None)
        if isinstance(node, Cases):
            for _, v in list(node.branches) + [(None, node.default)]:
                if not isinstance(v, RawNum):
                    _, t = self.infer(v, scope)
                    if t is not None:
                        return self.check(node, t, scope), t
            return self.check(node, REAL, scope), None
        return self.check(node, REAL, scope), REAL

    def formula(self, node, scope: _Scope) -> Formula:
        if isinstance(node, Compare):
            left, lt = self.infer(node.left, scope)
            right, rt = self.infer(node.right, scope)
            if lt is None and _is_sym_type(rt):
                left = self._num(node.left, rt)
                lt = rt
            elif rt is None and _is_sym_type(lt):
                right = self._num(node.right, lt)
                rt = lt
            ls, rs = _is_sym_type(lt), _is_sym_type(rt)
            if ls != rs:
                raise StaticTypeError(f"cannot compare a symbol with a real in {node.op!r}", node.span)
            if ls and node.op not in ("=", "!="):
                raise StaticTypeError(f"ordering comparison {node.op!r} on symbolic values", node.span)
            return Compare(node.op, left, right, node.span)
        if isinstance(node, And):
            return And(self.formula(node.left, scope), self.formula(node.right, scope), node.span)
        if isinstance(node, Or):
            return Or(self.formula(node.left, scope), self.formula(node.right, scope), node.span)
        if isinstance(node, Implies):
            return Implies(self.formula(node.left, scope), self.formula(node.right, scope), node.span)
        if isinstance(node, Not):
            return Not(self.formula(node.arg, scope), node.span)
        if isinstance(node, BoolConst):
            return node
        raise StaticTypeError("expected a formula", getattr(node, "span", None))

    # helpers
    def _num(self, node: RawNum, expected: Domain) -> Const:
        if isinstance(expected, FiniteDomain):
            s = Sym(node.text)
            if s not in expected.values:
                raise DomainMismatch(f"{node.text} is not in domain {expected}", node.span)
            return Const(s, node.span)
        return Const(float(node.text), node.span)

    def _name(self, node: RawName, scope: _Scope, expected: Domain | None) -> tuple[Expr, Domain]:
        if node.name in scope.fluents:
            if node.at is not None:
                if not scope.allow_history:
                    raise StaticTypeError("history references (@) are only allowed in queries", node.span)
                if scope.max_history is not None and node.at > scope.max_history:
                    raise StaticTypeError(
                        f"{node.name}@{node.at} refers past the end of the action sequence", node.span
                    )
            return FluentRef(node.name, node.at, node.span), scope.fluents[node.name].domain
        if node.at is not None:
            raise UnknownIdentifier(f"unknown fluent {node.name!r}", node.span)
        if node.name in scope.params:
            return ParamRef(node.name, node.span), scope.params[node.name]
        if node.name in scope.symbols:
            s = Sym(node.name)
            if isinstance(expected, FiniteDomain) and s not in expected.values:
                raise DomainMismatch(f"{node.name} is not in domain {expected}", node.span)
            return Const(s, node.span), FiniteDomain((s,))
        raise UnknownIdentifier(f"unknown identifier {node.name!r}", node.span)

    def _need_real(self, expected: Domain, span: Span | None) -> None:
        if not isinstance(expected, RealDomain):
            raise StaticTypeError(f"arithmetic where a value of {expected} is required", span)

    def _agree(self, got: Domain, expected: Domain, span: Span | None) -> None:
        if isinstance(expected, RealDomain) != isinstance(got, RealDomain):
            raise StaticTypeError(f"expected a value of {expected}, found one of {got}", span)


def _symbols(fluents: Iterable[FluentDecl], actions: Iterable[ActionDecl] | Iterable[RawAction]) -> frozenset[str]:
    out: set[str] = set()
    for f in fluents:
        if isinstance(f.domain, FiniteDomain):
            out.update(f.domain.values)
    for a in actions:
        if isinstance(a, RawAction):
            doms = [d for _, d, _ in a.nominal + a.actual]
        else:
            doms = [p.domain for p in a.params]
        for d in doms:
            if isinstance(d, FiniteDomain):
                out.update(d.values)
    return frozenset(out)


def parse_theory(text: str) -> TheorySpec:
    """Parse and resolve a theory. Raises a :class:`TheoryError` subclass on failure."""
    name, raw_fluents, raw_actions, inits, raw_config = _Parser(text).theory()
    diags: list[Diagnostic] = []
    first: TheoryError | None = None

    def record(err: TheoryError) -> None:
        nonlocal first
        if first is None:
            first = err
        diags.extend(err.diagnostics)

    fluents: dict[str, FluentDecl] = {}
    for fname, dom, span in raw_fluents:
        if fname in fluents:
            record(DuplicateName(f"fluent {fname!r} declared twice", span))
            continue
        fluents[fname] = FluentDecl(fname, dom, span)
    if not fluents and first is None:
        record(DslSyntaxError("a theory must declare at least one fluent", Span(1, 1), frozenset({"fluent"})))
    if len(inits) > 1:
        record(DuplicateName("init p given more than once", inits[1][1]))
    elif not inits:
        record(DslSyntaxError("missing 'init p = ...' declaration", Span(1, 1), frozenset({"init"})))

    symbols = _symbols(fluents.values(), raw_actions)
    res = _Resolver()
    actions: dict[str, ActionDecl] = {}
    for ra in raw_actions:
        try:
            actions_decl = _resolve_action(ra, fluents, symbols, res)
        except TheoryError as err:
            record(err)
            continue
        if ra.name in actions:
            record(DuplicateName(f"action {ra.name!r} declared twice", ra.span))
            continue
        actions[ra.name] = actions_decl

    init_p: Expr = Const(0.0)
    init_span = None
    if inits:
        raw, init_span = inits[0]
        try:
            init_p = res.check(raw, REAL, _Scope(fluents, {}, symbols))
        except TheoryError as err:
            record(err)

    config: dict[str, str] = {}
    for key, val, span in raw_config:
        if key in config:
            record(DuplicateName(f"config key {key!r} given twice", span))
        config[key] = val

    if first is not None:
        if isinstance(first, DslSyntaxError) or len(diags) == 1:
            raise first
        raise type(first)(first.message, first.span, diags)
    return TheorySpec(name, tuple(fluents.values()), tuple(actions.values()), init_p, config, init_span, text)


def _resolve_action(ra: RawAction, fluents: Mapping[str, FluentDecl], symbols, res: _Resolver) -> ActionDecl:
    params: dict[str, Domain] = {}
    for pname, dom, span in ra.nominal + ra.actual:
        if pname in params:
            raise DuplicateName(f"parameter {pname!r} declared twice in {ra.name}", span)
        if pname in fluents:
            raise DuplicateName(f"parameter {pname!r} shadows a fluent", span)
        params[pname] = dom
    if ra.sensing and ra.actual:
        raise StaticTypeError(f"sensing action {ra.name} cannot have actual parameters", ra.span)
    kind = SENSING if ra.sensing else (NOISY if ra.actual else DETERMINISTIC)
    scope = _Scope(fluents, params, symbols)
    likelihood: Expr = Const(1.0)
    lik_span = None
    poss: Formula = BoolConst(True)
    ssa: dict[str, Expr] = {}
    ssa_spans: dict[str, Span] = {}
    seen: set[str] = set()
    for kind_item, fl, raw, span in ra.items:
        key = kind_item if kind_item != "ssa" else f"ssa:{fl}"
        if key in seen:
            raise DuplicateName(f"{kind_item} {fl or ''} given twice in action {ra.name}".replace("  ", " "), span)
        seen.add(key)
        if kind_item == "likelihood":
            likelihood = res.check(raw, REAL, scope)
            lik_span = span
        elif kind_item == "poss":
            poss = res.formula(raw, scope)
        else:
            if fl not in fluents:
                raise UnknownIdentifier(f"unknown fluent {fl!r} in successor state axiom", span)
            ssa[fl] = res.check(raw, fluents[fl].domain, scope)
            ssa_spans[fl] = span
    return ActionDecl(
        ra.name,
        tuple(ParamDecl(n, d) for n, d, _ in ra.nominal),
        tuple(ParamDecl(n, d) for n, d, _ in ra.actual),
        kind,
        poss,
        likelihood,
        ssa,
        ra.span,
        ssa_spans,
        lik_span,
    )


def _ground_value(text: str, domain: Domain, span: Span):
    if isinstance(domain, FiniteDomain):
        s = Sym(text)
        if s not in domain.values:
            raise DomainMismatch(f"{text} is not in domain {domain}", span)
        return s
    try:
        return float(text)
    except ValueError:
        raise DomainMismatch(f"{text} is not a real number", span) from None


def resolve_ground(spec: TheorySpec, rg: RawGround) -> GroundAction:
    if not spec.has_action(rg.name):
        raise UnknownIdentifier(f"unknown action {rg.name!r}", rg.span)
    decl = spec.action(rg.name)
    nominal, actual = rg.nominal, rg.actual
    n_nom, n_act = len(decl.nominal_params), len(decl.actual_params)
    if actual is None and len(nominal) == n_nom + n_act and n_act:
        nominal, actual = nominal[:n_nom], nominal[n_nom:]
    if len(nominal) != n_nom:
        raise ArityMismatch(f"{rg.name} takes {n_nom} nominal argument(s), got {len(nominal)}", rg.span)
    if actual is not None and len(actual) != n_act:
        raise ArityMismatch(f"{rg.name} takes {n_act} actual argument(s), got {len(actual)}", rg.span)
    nom = tuple(_ground_value(t, p.domain, s) for (t, s), p in zip(nominal, decl.nominal_params))
    act = None
    if actual is not None:
        act = tuple(_ground_value(t, p.domain, s) for (t, s), p in zip(actual, decl.actual_params))
    return GroundAction(rg.name, nom, act)


def parse_ground_action(spec: TheorySpec, text: str) -> GroundAction:
    p = _Parser(text)
    rg = p.ground()
    if p.tok.kind != "eof":
        raise p.fail(["end of input"])
    return resolve_ground(spec, rg)


def parse_formula(spec: TheorySpec, text: str, max_history: int | None = None) -> Formula:
    p = _Parser(text)
    raw = p.formula()
    if p.tok.kind != "eof":
        raise p.fail(["end of formula"])
    scope = _Scope({f.name: f for f in spec.fluents}, {}, _symbols(spec.fluents, spec.actions), True, max_history)
    return _Resolver().formula(raw, scope)


def parse_query(text: str, spec: TheorySpec) -> Query:
    kind, raw_formula, fluent_tok, raw_alpha, opts = _Parser(text).query()
    alpha = tuple(resolve_ground(spec, rg) for rg in raw_alpha)
    if kind == MARGINAL:
        fname = fluent_tok.text
        if fname not in spec.fluent_names:
            raise UnknownIdentifier(f"unknown fluent {fname!r}", fluent_tok.span)
        bins = 50
        rng = None
        if "bins" in opts:
            try:
                bins = int(opts.pop("bins"))
            except ValueError:
                raise DomainMismatch("bins must be an integer", fluent_tok.span) from None
            if bins < 1:
                raise DomainMismatch("bins must be at least 1", fluent_tok.span)
        if "range" in opts:
            lo, hi = (float(x) for x in opts.pop("range").split(","))
            if not hi > lo:
                raise DomainMismatch("range must satisfy lo < hi", fluent_tok.span)
            rng = (lo, hi)
        return Query(MARGINAL, alpha, None, fname, bins, rng, opts, text.strip())
    scope = _Scope(
        {f.name: f for f in spec.fluents}, {}, _symbols(spec.fluents, spec.actions), True, len(alpha)
    )
    formula = _Resolver().formula(raw_formula, scope)
    return Query(BEL if kind == "bel" else KNOWS, alpha, formula, None, 50, None, opts, text.strip())


def parse_query_file(text: str, spec: TheorySpec) -> list[Query]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(parse_query(line, spec))
    return out


# -- pretty printing ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_value(v) -> str:
    if isinstance(v, Sym):
        return str(v)
    return repr(float(v))


def format_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Const):
        s = _fmt_value(e.value)
        return f"({s})" if s.startswith("-") and prec > 0 else s
    if isinstance(e, FluentRef):
        return e.name if e.at is None else f"{e.name}@{e.at}"
    if isinstance(e, ParamRef):
        return e.name
    if isinstance(e, Unary):
        if e.op == "abs":
            return f"abs({format_expr(e.arg)})"
        s = f"-{format_expr(e.arg, 3)}"
        return f"({s})" if prec > 0 else s
    if isinstance(e, Binary):
        if e.op in ("min", "max"):
            return f"{e.op}({format_expr(e.left)}, {format_expr(e.right)})"
        p = _PREC[e.op]
        s = f"{format_expr(e.left, p)} {e.op} {format_expr(e.right, p + 1)}"
        return f"({s})" if p < prec else s
    if isinstance(e, Gauss):
        return f"gauss({format_expr(e.arg)}; {format_expr(e.mean)}, {format_expr(e.var)})"
    if isinstance(e, Cases):
        parts = [f"{format_expr(v)} if {format_formula(g)}" for g, v in e.branches]
        parts.append(format_expr(e.default))
        return "cases { " + " ; ".join(parts) + " }"
    raise TypeError(f"not an expression: {e!r}")


_FPREC = {Implies: 1, Or: 2, And: 3, Not: 4}


def format_formula(f: Formula, prec: int = 0) -> str:
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, Compare):
        s = f"{format_expr(f.left)} {f.op} {format_expr(f.right)}"
        return f"({s})" if prec > 4 else s
    p = _FPREC[type(f)]
    if isinstance(f, Not):
        s = f"not {format_formula(f.arg, 5)}"
    elif isinstance(f, Implies):
        s = f"{format_formula(f.left, p + 1)} implies {format_formula(f.right, p)}"
    else:
        word = "and" if isinstance(f, And) else "or"
        s = f"{format_formula(f.left, p)} {word} {format_formula(f.right, p + 1)}"
    return f"({s})" if p < prec else s


def _fmt_domain(d: Domain) -> str:
    return "real" if isinstance(d, RealDomain) else "{ " + ", ".join(d.values) + " }"


def format_theory(spec: TheorySpec) -> str:
    lines = [f"theory {spec.name}"]
    for f in spec.fluents:
        lines.append(f"fluent {f.name} : {_fmt_domain(f.domain)}")
    for k, v in spec.config.items():
        lines.append(f"config {k} = {v}")
    lines.append(f"init p = {format_expr(spec.init_p)}")
    for a in spec.actions:
        params = ", ".join(f"{p.name}: {_fmt_domain(p.domain)}" for p in a.nominal_params)
        if a.actual_params:
            params += " ~ " + ", ".join(f"{p.name}: {_fmt_domain(p.domain)}" for p in a.actual_params)
        head = f"action {a.name}({params})" + (" sensing" if a.kind == SENSING else "")
        body = []
        if a.precondition != BoolConst(True):
            body.append(f"  poss = {format_formula(a.precondition)}")
        if a.likelihood != Const(1.0):
            body.append(f"  likelihood = {format_expr(a.likelihood)}")
        for fl, e in a.ssa.items():
            body.append(f"  {fl}' = {format_expr(e)}")
        lines.append(head + " {" + ("\n" + "\n".join(body) + "\n" if body else " ") + "}")
    return "\n".join(lines) + "\n"


def format_query(q: Query) -> str:
    alpha = ", ".join(str(a) for a in q.alpha)
    if q.kind == MARGINAL:
        s = f"marginal {q.fluent} after [{alpha}] bins={q.bins}"
        if q.range:
            s += f" range={q.range[0]!r},{q.range[1]!r}"
    else:
        s = f"{q.kind} {format_formula(q.formula)} after [{alpha}]"
    for k, v in q.options.items():
        s += f" {k}={v}"
    return s
