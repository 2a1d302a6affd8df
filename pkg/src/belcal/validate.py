"""Static and sampled well-formedness checks for parsed theories."""

from __future__ import annotations

import itertools

import numpy as np

from .analysis import init_form, init_branches
from .errors import BelcalError, Diagnostic, DomainViolation, NegativeLikelihood, NonPositiveVariance, Span
from .expr import Env, FiniteDomain, ParamRef, Sym, WorldPoint, eval_expr, fluent_refs, walk
from .theory import NOISY, SENSING, ActionDecl, TheorySpec

SAMPLES = 512
_ENUM_LIMIT = 4096


def _params_in(node) -> set[str]:
    return {n.name for n in walk(node) if isinstance(n, ParamRef)}


def _real_range(spec: TheorySpec) -> dict[str, tuple[float, float]]:
    """Sampling ranges for real fluents: the init support where bounded."""
    out = {}
    brs = init_branches(spec)
    for f in spec.real_fluents:
        lo, hi = np.inf, -np.inf
        for br in brs:
            blo, bhi = br.interval(f.name)
            if f.name in br.gauss:
                m, var = br.gauss[f.name]
                blo, bhi = max(blo, m - 4 * var ** 0.5), min(bhi, m + 4 * var ** 0.5)
            lo, hi = min(lo, blo), max(hi, bhi)
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            lo, hi = -100.0, 100.0
        out[f.name] = (lo - 1.0, hi + 1.0)
    return out


def _points(spec: TheorySpec, decl: ActionDecl | None, names_f: set[str], names_p: set[str],
            rng: np.random.Generator):
    """Enumerate finite combinations, or sample when something is real or too large."""
    fl = [spec.fluent(n) for n in spec.fluent_names if n in names_f]
    ps = [p for p in (decl.params if decl else ()) if p.name in names_p]
    doms = [f.domain for f in fl] + [p.domain for p in ps]
    finite = all(isinstance(d, FiniteDomain) for d in doms)
    size = int(np.prod([len(d.values) for d in doms if isinstance(d, FiniteDomain)] or [1]))
    ranges = _real_range(spec)
    defaults = {f.name: (f.domain.values[0] if not f.is_real else 0.0) for f in spec.fluents}

    def point(fv, pv):
        vals = dict(defaults)
        vals.update({f.name: v for f, v in zip(fl, fv)})
        return WorldPoint(spec.fluent_names, [vals[n] for n in spec.fluent_names]), {
            p.name: v for p, v in zip(ps, pv)
        }

    if finite and size <= _ENUM_LIMIT:
        for combo in itertools.product(*(d.values for d in doms)):
            yield point(combo[: len(fl)], combo[len(fl):])
        return
    for _ in range(SAMPLES):
        fv = [
            rng.choice(f.domain.values) if not f.is_real else float(rng.uniform(*ranges[f.name]))
            for f in fl
        ]
        pv = [
            Sym(rng.choice(p.domain.values)) if not p.is_real else float(rng.uniform(-20.0, 20.0))
            for p in ps
        ]
        yield point([Sym(v) if isinstance(v, str) else v for v in fv], pv)


def _probe(spec, decl, expr, rng):
    """First evaluation failure of ``expr`` over enumerated or sampled inputs."""
    names_f = {r.name for r in fluent_refs(expr)}
    names_p = _params_in(expr)
    for w, params in _points(spec, decl, names_f, names_p, rng):
        try:
            v = eval_expr(expr, Env((w,), params, 0))
        except NonPositiveVariance as e:
            return e, None
        except BelcalError:
            continue
        if not isinstance(v, Sym) and v < 0:
            return NegativeLikelihood(f"value {v} < 0"), (w, params)
    return None, None


def _diag(code: str, msg: str, span: Span | None, fallback: Span | None, severity: str = "error") -> Diagnostic:
    return Diagnostic(code, msg, span or fallback or Span(1, 1), severity)


def validate(spec: TheorySpec) -> list[Diagnostic]:
    """All problems found in ``spec``; an empty list means well-formed."""
    rng = np.random.default_rng(0)
    out: list[Diagnostic] = []
    for a in spec.actions:
        nominal = {p.name for p in a.nominal_params}
        actual = {p.name for p in a.actual_params}
        if a.kind == SENSING:
            for f in a.ssa:
                out.append(_diag("SensingMutation", f"sensing action {a.name} mutates fluent {f}",
                                 a.ssa_spans.get(f), a.span))
        if a.kind == NOISY:
            missing = actual - _params_in(a.likelihood)
            for p in sorted(missing):
                out.append(_diag("NoisyLikelihood",
                                 f"likelihood of noisy action {a.name} does not mention actual parameter {p}",
                                 a.likelihood_span, a.span))
            for f, e in a.ssa.items():
                used = _params_in(e) & nominal
                if used:
                    out.append(_diag("NominalInEffect",
                                     f"effect on {f} in noisy action {a.name} uses nominal parameter(s) "
                                     + ", ".join(sorted(used)) + "; effects must depend on the actual outcome",
                                     a.ssa_spans.get(f), a.span))
        for f, e in a.ssa.items():
            dom = spec.fluent(f).domain
            if not isinstance(dom, FiniteDomain):
                continue
            for w, params in _points(spec, a, {r.name for r in fluent_refs(e)}, _params_in(e), rng):
                try:
                    v = eval_expr(e, Env((w,), params, 0))
                except BelcalError:
                    continue
                if v not in dom:
                    out.append(_diag(DomainViolation.code, f"{a.name} can set {f} to {v!r}, outside {dom}",
                                     a.ssa_spans.get(f), a.span))
                    break
        err, _ = _probe(spec, a, a.likelihood, rng)
        if err is not None:
            out.append(_diag(err.code, f"likelihood of {a.name}: {err}", a.likelihood_span, a.span))
    err, _ = _probe(spec, None, spec.init_p, rng)
    if err is not None:
        out.append(_diag(err.code, f"init p: {err}", spec.init_span, None))
    if init_form(spec) == "grid-only":
        out.append(_diag("GridOnly", "init p is not in a form the samplers recognize; grid-only",
                         spec.init_span, None, severity="warning"))
    return out


def errors_only(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "error"]


__all__ = ["validate", "errors_only"]
