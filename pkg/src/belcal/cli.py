"""``belcal`` command line: run queries, export marginal data, run the acceptance table.

Exit codes: 0 success, 1 a query failed to evaluate, 2 a file could not be read,
parsed or validated.  Configuration precedence is flags > query options >
theory ``config`` entries.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, replace
from typing import Any, Sequence

from . import library
from .analysis import support_box
from .dsl import parse_query, parse_theory
from .engine import BeliefResult, EngineConfig, Histogram, KnowsResult, answer, theory_config
from .errors import BelcalError, Diagnostic, Span, TheoryError
from .expr import FiniteDomain, fluent_refs
from .oracle import ErrFn, PriorGrid, bayes_posterior, enumerate_bel
from .theory import BEL, MARGINAL, SENSING, Query, TheorySpec
from .validate import errors_only, validate

EXIT_OK, EXIT_QUERY, EXIT_INPUT = 0, 1, 2

# flag dest -> engine option name
_FLAG_OPTIONS = {
    "backend": "backend",
    "samples": "mc_samples",
    "seed": "seed",
    "grid": "quad_points_per_dim",
    "trunc_sigmas": "gauss_truncation_sigmas",
    "eps": "equality_epsilon",
}


class InputError(Exception):
    """Unreadable, unparsable or invalid input; carries printable diagnostics."""

    def __init__(self, lines: list[str]):
        super().__init__("\n".join(lines))
        self.lines = lines


@dataclass
class SourcedQuery:
    query: Query
    origin: str  # path:line or <arg N>


def _load_theory(path: str) -> tuple[TheorySpec, str]:
    try:
        text = library.read_theory_source(path)
    except (OSError, UnicodeDecodeError) as e:
        raise InputError([f"{path}: error: cannot read theory: {getattr(e, 'strerror', None) or e}"]) from None
    try:
        spec = parse_theory(text)
    except TheoryError as e:
        raise InputError([d.format(path) for d in e.diagnostics]) from None
    diags = validate(spec)
    for d in diags:
        if d.severity != "error":
            print(d.format(path), file=sys.stderr)
    errs = errors_only(diags)
    if errs:
        raise InputError([d.format(path) for d in errs])
    return spec, text


def _shift(e: TheoryError, line: int) -> list[Diagnostic]:
    """Re-anchor diagnostics from a one-line parse at ``line`` of a file."""
    out = []
    for d in e.diagnostics:
        span = Span(line, d.span.col, d.span.end_col) if d.span else Span(line, 1)
        out.append(replace(d, span=span))
    return out


def _load_queries(spec: TheorySpec, files: Sequence[str], inline: Sequence[str]) -> list[SourcedQuery]:
    out: list[SourcedQuery] = []
    problems: list[str] = []
    for path in files:
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except (OSError, UnicodeDecodeError) as e:
            problems.append(f"{path}: error: cannot read query file: {getattr(e, 'strerror', None) or e}")
            continue
        for n, raw in enumerate(lines, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            col0 = raw.index(text)
            try:
                out.append(SourcedQuery(parse_query(text, spec), f"{path}:{n}"))
            except TheoryError as e:
                for d in _shift(e, n):
                    span = Span(n, d.span.col + col0, d.span.end_col)
                    problems.append(replace(d, span=span).format(path))
    for i, text in enumerate(inline, 1):
        where = f"<query {i}>"
        try:
            out.append(SourcedQuery(parse_query(text, spec), where))
        except TheoryError as e:
            problems.extend(d.format(where) for d in _shift(e, 1))
    if problems:
        raise InputError(problems)
    return out


def _flag_overrides(args: argparse.Namespace) -> dict[str, Any]:
    opts: dict[str, Any] = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, ValueError) as e:
            raise InputError([f"{args.config}: error: cannot load config: {e}"]) from None
        if isinstance(data, dict) and "flags" in data and "queries" in data:
            data = data["flags"]  # a previous JSON report
        if not isinstance(data, dict):
            raise InputError([f"{args.config}: error: config must be a JSON object"])
        opts.update(data)
    for dest, name in _FLAG_OPTIONS.items():
        v = getattr(args, dest, None)
        if v is not None:
            opts[name] = v
    return opts


# -- oracle selection -----------------------------------------------------------------

def _all_finite(spec: TheorySpec, q: Query) -> bool:
    if spec.real_fluents:
        return False
    return all(isinstance(p.domain, FiniteDomain) for a in q.alpha for p in spec.action(a.name).actual_params)


def oracle_value(spec: TheorySpec, q: Query, cfg: EngineConfig) -> tuple[float | None, str]:
    """Reference value for a bel query, or ``None`` with the reason it does not apply."""
    if q.kind != BEL:
        return None, "oracle applies to bel queries only"
    if _all_finite(spec, q):
        return float(enumerate_bel(spec, q)), "enumeration"
    names = {a.name for a in q.alpha}
    if len(names) != 1:
        return None, "needs a non-empty sequence of one sensing action"
    decl = spec.action(names.pop())
    if decl.kind != SENSING:
        return None, f"{decl.name} is not a sensing action"
    try:
        err = ErrFn.from_action(spec, decl.name)
    except ValueError as e:
        return None, str(e)
    measured = spec.fluent(err.fluent)
    other_real = {f.name for f in spec.real_fluents} - {measured.name}
    if other_real & {r.name for r in fluent_refs(q.formula)}:
        return None, "the formula mentions an unmeasured real fluent"
    if any(r.at not in (None, 0) for r in fluent_refs(q.formula)):
        return None, "the formula refers to a later history index"
    box = support_box(spec, cfg.gauss_truncation_sigmas)
    ranges = {measured.name: (*box[measured.name], 3001)} if measured.is_real else {}
    aux = {n: (*box[n], 101) for n in other_real}
    prior = PriorGrid.from_spec(spec, ranges, aux)
    readings = [a.nominal_args[0] for a in q.alpha]
    return bayes_posterior(prior, err, readings, q.formula), "grid posterior"


# -- output -------------------------------------------------------------------------

def histogram_csv(h: Histogram) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_lo", "bin_hi", "mass"])
    for lo, hi, m in h.rows():
        w.writerow([repr(lo), repr(hi), repr(m)])
    for v, m in h.atoms:
        w.writerow(["atom", repr(v), repr(m)])
    return buf.getvalue()


def _result_record(res) -> dict[str, Any]:
    if isinstance(res, BeliefResult):
        return {"value": res.value, "numerator": res.numerator, "gamma": res.gamma,
                "stderr": res.stderr, "backend": res.backend, "diagnostics": dict(res.diagnostics)}
    if isinstance(res, KnowsResult):
        return {"value": res.value, "violations": res.violations, "support": res.support,
                "backend": res.backend, "diagnostics": dict(res.diagnostics)}
    return {"fluent": res.fluent, "edges": res.edges.tolist(), "masses": res.masses.tolist(),
            "atoms": [list(a) for a in res.atoms], "underflow": res.underflow, "overflow": res.overflow,
            "total": res.total, "backend": res.backend, "diagnostics": dict(res.diagnostics)}


def _describe(res) -> str:
    if isinstance(res, BeliefResult):
        s = f"{res.value:.6f}"
        if res.stderr is not None:
            s += f" ± {res.stderr:.6f}"
            if res.diagnostics.get("low_ess"):
                s += " (low effective sample size)"
        return s
    if isinstance(res, KnowsResult):
        return f"{'true' if res.value else 'false'} ({res.violations} of {res.support} points violate)"
    return f"histogram, total mass {res.total:.6f}"


def _text_histogram(h: Histogram) -> list[str]:
    lines = [f"    atom {v:g}: {m:.6f}" for v, m in h.atoms]
    lines += [f"    [{lo:g}, {hi:g}): {m:.6f}" for lo, hi, m in h.rows()]
    return lines


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    return str(o)


def _finite_json(x):
    """Replace non-finite floats so the report stays strict JSON."""
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _finite_json(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_finite_json(v) for v in x]
    return x


# -- commands ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    t_start = time.perf_counter()
    spec, text = _load_theory(args.theory)
    queries = _load_queries(spec, args.queries, args.query or [])
    if not queries:
        raise InputError([f"{args.theory}: error: no queries given (use -q or a query file)"])
    flags = _flag_overrides(args)
    base = theory_config(spec).with_options(flags)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    records = []
    status = EXIT_OK
    for i, sq in enumerate(queries, 1):
        q = sq.query
        rec: dict[str, Any] = {"query": q.text, "origin": sq.origin, "kind": q.kind}
        t0 = time.perf_counter()
        try:
            cfg = theory_config(spec).with_options(q.options).with_options(flags)
            rec["config"] = cfg.to_dict()
            res = answer(spec, q, cfg)
            rec["result"] = _result_record(res)
            if q.kind == MARGINAL and args.out:
                path = os.path.join(args.out, f"q{i:02d}_{q.fluent}.csv")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(histogram_csv(res))
                rec["csv"] = path
            if args.oracle:
                ref, how = oracle_value(spec, q, cfg)
                rec["oracle"] = {"method": how, "value": ref,
                                 "delta": None if ref is None else res.value - ref}
        except BelcalError as e:
            rec["error"] = {"code": e.code, "message": str(e)}
            res = None
            status = EXIT_QUERY
        rec["seconds"] = time.perf_counter() - t0
        records.append(rec)
        if args.format == "text":
            _print_text(sq, rec, res)
    if args.format == "json":
        report = {
            "theory": args.theory,
            "theory_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
            "config": base.to_dict(),
            "flags": flags,
            "queries": records,
            "wall_seconds": time.perf_counter() - t_start,
        }
        print(json.dumps(_finite_json(report), indent=2, default=_json_default))
    return status


def _print_text(sq: SourcedQuery, rec: dict[str, Any], res) -> None:
    if "error" in rec:
        print(f"{sq.origin}: error: [{rec['error']['code']}] {rec['error']['message']}")
        return
    print(f"{sq.query.text}  =>  {_describe(res)}  [{res.backend}, {rec['seconds']:.2f}s]")
    if isinstance(res, Histogram):
        if "csv" in rec:
            print(f"    written to {rec['csv']}")
        else:
            for line in _text_histogram(res):
                print(line)
    if "oracle" in rec:
        o = rec["oracle"]
        if o["value"] is None:
            print(f"    oracle: n/a ({o['method']})")
        else:
            print(f"    oracle ({o['method']}): {o['value']:.6f}, delta {o['delta']:+.2e}")


def cmd_plotdata(args: argparse.Namespace) -> int:
    spec, _ = _load_theory(args.theory)
    [sq] = _load_queries(spec, [], [args.query])
    q = sq.query
    if q.kind != MARGINAL:
        raise InputError([f"<query 1>: error: plotdata needs a marginal query, got {q.kind}"])
    cfg = theory_config(spec).with_options(q.options).with_options(_flag_overrides(args))
    try:
        h = answer(spec, q, cfg)
    except BelcalError as e:
        print(f"<query 1>: error: [{e.code}] {e}", file=sys.stderr)
        return EXIT_QUERY
    data = histogram_csv(h)
    path = args.output
    if path is None and args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"marginal_{q.fluent}.csv")
    if path is None:
        sys.stdout.write(data)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(data)
        print(f"wrote {path} (total mass {h.total:.6f})", file=sys.stderr)
    return EXIT_OK


def cmd_test_paper(args: argparse.Namespace) -> int:
    from .acceptance import ROWS, render, run_row

    rows = []
    for n, _, _ in ROWS:
        row = run_row(n)
        rows.append(row)
        print(row.line(), flush=True)
        if args.verbose or not row.ok:
            for c in row.checks:
                print("      " + str(c))
            if row.error:
                print("      error: " + row.error)
    summary = render(rows, verbose=False).splitlines()[-1]
    print(summary)
    return EXIT_OK if all(r.ok for r in rows) else EXIT_QUERY


# -- parser -------------------------------------------------------------------------------

def _engine_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("engine options (override query and theory settings)")
    g.add_argument("--backend", choices=("quad", "mc"))
    g.add_argument("--samples", type=int, metavar="N", help="Monte Carlo sample count")
    g.add_argument("--seed", type=int, metavar="N", help="Monte Carlo seed")
    g.add_argument("--grid", type=int, metavar="N", help="quadrature points per dimension")
    g.add_argument("--trunc-sigmas", dest="trunc_sigmas", type=float, metavar="X",
                   help="gauss truncation in standard deviations")
    g.add_argument("--eps", type=float, metavar="X", help="tolerance for = and != on reals")
    g.add_argument("--config", metavar="JSON", help="option overrides, or a previous JSON report to replay")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="belcal", description="Degrees of belief for action theories.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evaluate queries against a theory")
    r.add_argument("theory", help="theory file, or builtin:NAME")
    r.add_argument("queries", nargs="*", help="query files, one query per line")
    r.add_argument("-q", "--query", action="append", help="a query given inline (repeatable)")
    r.add_argument("--format", choices=("text", "json"), default="text")
    r.add_argument("--out", metavar="DIR", help="write marginal histograms here as CSV")
    r.add_argument("--oracle", action="store_true", help="also compute a reference value and print the delta")
    _engine_flags(r)
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("plotdata", help="write histogram CSV for a marginal query")
    d.add_argument("theory", help="theory file, or builtin:NAME")
    d.add_argument("query", help='e.g. "marginal h after [move(4)]"')
    d.add_argument("--out", metavar="DIR", help="directory for marginal_<fluent>.csv")
    d.add_argument("-o", "--output", metavar="FILE", help="exact output path (default: stdout)")
    _engine_flags(d)
    d.set_defaults(func=cmd_plotdata)

    t = sub.add_parser("test-paper", help="run the acceptance table")
    t.add_argument("-v", "--verbose", action="store_true", help="print every check, not only failures")
    t.set_defaults(func=cmd_test_paper)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        for line in e.lines:
            print(line, file=sys.stderr)
        return EXIT_INPUT
    except BelcalError as e:  # configuration problems surface before any query runs
        print(f"error: [{e.code}] {e}", file=sys.stderr)
        return EXIT_INPUT


__all__ = ["build_parser", "histogram_csv", "main", "oracle_value"]
