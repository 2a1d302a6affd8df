"""Degrees of belief after ground action sequences.

Both backends build a weighted population of initial points, push it through
the grounded alternatives of the intended actions, and reduce indicator sums
over the final population.  Weights follow the unrolled recursion
``init_p(x) * prod_j l(b_j)`` with zero weight for inexecutable steps.

``quad`` uses a midpoint tensor grid over initial real fluents and standardized
continuous outcomes, and enumerates everything finite.  ``mc`` draws initial
points and outcomes from the recognized proposals and importance-weights them.
Work is split into fixed chunks whose partial sums are combined in order, so
the result does not depend on the number of worker threads.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy import special

from . import kernels
from .analysis import init_branches, outcome_gauss, support_box
from .errors import (
    ConfigError,
    DegenerateBelief,
    DimensionLimit,
    DomainViolation,
    FiniteFluentMarginal,
    NegativeLikelihood,
    NonPositiveVariance,
    UnrecognizedLikelihoodForm,
)
from .expr import (
    TRUE,
    Binary,
    Cases,
    Const,
    FiniteDomain,
    FluentRef,
    Formula,
    Node,
    ParamRef,
    Sym,
)
from .sampling import InitSampler
from .theory import BEL, KNOWS, MARGINAL, ActionDecl, GroundAction, Query, TheorySpec

QUAD = "quad"
MC = "mc"


# -- configuration and results ------------------------------------------------

@dataclass(frozen=True)
class EngineConfig:
    backend: str = QUAD
    mc_samples: int = 200_000
    seed: int = 0
    quad_points_per_dim: int = 2001
    gauss_truncation_sigmas: float = 8.0
    max_quad_dims: int = 4
    equality_epsilon: float = 0.0
    max_quad_nodes: int = 1 << 24
    chunk_size: int = 1 << 20
    mc_chunk_size: int = 1 << 16
    atom_threshold: float = 0.01
    threads: int | None = None
    kernel: str | None = None

    def __post_init__(self) -> None:
        if self.backend not in (QUAD, MC):
            raise ConfigError(f"backend must be quad or mc, got {self.backend!r}")
        for name in ("mc_samples", "quad_points_per_dim", "max_quad_dims", "max_quad_nodes",
                     "chunk_size", "mc_chunk_size"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v > 0):
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ConfigError(f"seed must be a 64-bit non-negative integer, got {self.seed!r}")
        if not (self.gauss_truncation_sigmas > 0 and math.isfinite(self.gauss_truncation_sigmas)):
            raise ConfigError("gauss_truncation_sigmas must be positive")
        if not (self.equality_epsilon >= 0 and math.isfinite(self.equality_epsilon)):
            raise ConfigError("equality_epsilon must be >= 0")
        if not 0 < self.atom_threshold <= 1:
            raise ConfigError("atom_threshold must be in (0, 1]")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.kernel not in (None, *kernels.AVAILABLE):
            raise ConfigError(f"kernel {self.kernel!r} is not available")

    # short option names used in theory files, query options and the CLI
    ALIASES = {
        "backend": "backend",
        "samples": "mc_samples",
        "mc_samples": "mc_samples",
        "seed": "seed",
        "grid": "quad_points_per_dim",
        "quad_points_per_dim": "quad_points_per_dim",
        "trunc_sigmas": "gauss_truncation_sigmas",
        "trunc-sigmas": "gauss_truncation_sigmas",
        "gauss_truncation_sigmas": "gauss_truncation_sigmas",
        "max_dims": "max_quad_dims",
        "max_quad_dims": "max_quad_dims",
        "eps": "equality_epsilon",
        "equality_epsilon": "equality_epsilon",
        "max_nodes": "max_quad_nodes",
        "max_quad_nodes": "max_quad_nodes",
        "atom_threshold": "atom_threshold",
        "threads": "threads",
        "kernel": "kernel",
    }

    def with_options(self, options: Mapping[str, Any]) -> "EngineConfig":
        """Apply string or typed overrides by short or long name."""
        types = {f.name: f.type for f in fields(self)}
        updates: dict[str, Any] = {}
        for key, raw in options.items():
            name = self.ALIASES.get(key)
            if name is None:
                if key in ("bins", "range"):
                    continue
                raise ConfigError(f"unknown option {key!r}")
            updates[name] = _coerce(name, raw, types[name])
        try:
            return replace(self, **updates)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def workers(self) -> int:
        if self.threads is not None:
            return self.threads
        env = os.environ.get("BELCAL_THREADS")
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                raise ConfigError(f"BELCAL_THREADS must be an integer, got {env!r}") from None
        return os.cpu_count() or 1


def _coerce(name: str, raw: Any, typ: str):
    if not isinstance(raw, str):
        return raw
    try:
        if "int" in typ:
            return int(raw, 0) if raw.lower().startswith("0x") else int(raw)
        if "float" in typ:
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {name}") from None
    return raw


def theory_config(spec: TheorySpec, base: EngineConfig | None = None) -> EngineConfig:
    return (base or EngineConfig()).with_options(spec.config)


@dataclass(frozen=True)
class BeliefResult:
    value: float
    numerator: float
    gamma: float
    stderr: float | None
    backend: str
    diagnostics: Mapping[str, Any] = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class KnowsResult:
    value: bool
    violations: int
    support: int
    backend: str
    diagnostics: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __bool__(self) -> bool:
        return self.value


@dataclass(frozen=True)
class Histogram:
    fluent: str
    edges: np.ndarray
    masses: np.ndarray
    atoms: tuple[tuple[float, float], ...]
    underflow: float
    overflow: float
    backend: str
    diagnostics: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def rows(self) -> list[tuple[float, float, float]]:
        out = []
        if self.underflow > 0:
            out.append((-math.inf, float(self.edges[0]), self.underflow))
        out += [(float(lo), float(hi), float(m)) for lo, hi, m in zip(self.edges[:-1], self.edges[1:], self.masses)]
        if self.overflow > 0:
            out.append((float(self.edges[-1]), math.inf, self.overflow))
        return out

    @property
    def total(self) -> float:
        return math.fsum([*self.masses, self.underflow, self.overflow, *(m for _, m in self.atoms)])


# -- compilation helpers ---------------------------------------------------------

def _sym_checker(spec: TheorySpec, decl: ActionDecl | None = None) -> Callable[[Node], bool]:
    pdom = {p.name: p.domain for p in decl.params} if decl else {}

    def is_sym(n: Node) -> bool:
        if isinstance(n, Const):
            return isinstance(n.value, Sym)
        if isinstance(n, FluentRef):
            return not spec.fluent(n.name).is_real
        if isinstance(n, ParamRef):
            return isinstance(pdom.get(n.name), FiniteDomain)
        if isinstance(n, Cases):
            return is_sym(n.default)
        return False

    return is_sym


def _state_binding(now: int | None = None):
    """Bind fluents to current columns, or to history columns when ``now`` is given."""

    def bind(n: Node):
        if isinstance(n, FluentRef):
            if now is None:
                return ("col", n.name)
            return ("col", (n.name, now if n.at is None else n.at))
        raise ValueError(f"unbound parameter {n.name!r}")

    return bind


class _StepProgram:
    """Programs for one intended action, with nominal arguments folded in."""

    def __init__(self, spec: TheorySpec, a: GroundAction):
        decl = spec.action(a.name)
        self.decl = decl
        self.action = a
        nominal = dict(zip((p.name for p in decl.nominal_params), a.nominal_args))
        actual = {p.name for p in decl.actual_params}

        def bind(n: Node):
            if isinstance(n, FluentRef):
                return ("col", n.name)
            if n.name in nominal:
                return nominal[n.name]
            if n.name in actual:
                return ("col", ("$", n.name))
            raise ValueError(f"unbound parameter {n.name!r}")

        is_sym = _sym_checker(spec, decl)
        comp = lambda node: kernels.compile_node(node, bind, is_sym)  # noqa: E731
        self.poss = comp(decl.precondition) if decl.precondition != TRUE else None
        self.lik = comp(decl.likelihood)
        self.ssa = {f: comp(e) for f, e in decl.ssa.items()}
        self.finite_actual = [p for p in decl.actual_params if not p.is_real]
        self.real_actual = [p for p in decl.actual_params if p.is_real]
        self.probe = {}
        for p in self.real_actual:
            g = outcome_gauss(decl, p.name)
            self.probe[p.name] = (comp(Binary("-", g.arg, g.mean)), comp(g.var))
        self.domains = {
            f: np.array([v.code for v in spec.fluent(f).domain.values], dtype=np.float64)
            for f in decl.ssa if not spec.fluent(f).is_real
        }


class _Pop:
    """A weighted population: fluent columns per time step plus outcome columns."""

    def __init__(self, hist: list[dict[str, np.ndarray]], w: np.ndarray):
        self.hist = hist
        self.w = w
        self.params: dict[str, np.ndarray] = {}

    @property
    def size(self) -> int:
        return self.w.shape[0]

    @property
    def now(self) -> dict[str, np.ndarray]:
        return self.hist[-1]

    def _map(self, fn):
        seen: dict[int, np.ndarray] = {}

        def m(arr):
            k = id(arr)
            if k not in seen:
                seen[k] = fn(arr)
            return seen[k]

        self.hist = [{f: m(a) for f, a in h.items()} for h in self.hist]
        self.params = {p: m(a) for p, a in self.params.items()}
        self.w = fn(self.w)

    def keep(self, mask: np.ndarray) -> None:
        if not mask.all():
            self._map(lambda a: a[mask])

    def repeat(self, k: int) -> None:
        if k != 1:
            self._map(lambda a: np.repeat(a, k))

    def column(self, key) -> np.ndarray:
        if isinstance(key, tuple) and key[0] == "$":
            return self.params[key[1]]
        if isinstance(key, tuple):
            name, t = key
            return self.hist[t][name]
        return self.now[key]


def _run(prog, pop: _Pop, cfg: EngineConfig, overrides: Mapping | None = None) -> np.ndarray:
    cols = []
    for key in prog.inputs:
        if overrides and key in overrides:
            cols.append(overrides[key])
        else:
            cols.append(pop.column(key))
    return kernels.evaluate(prog, cols, pop.size, cfg.equality_epsilon, cfg.kernel)


def _outcome_frame(step: _StepProgram, pop: _Pop, cfg: EngineConfig) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Per-node centre and scale of each continuous outcome's gauss atom."""
    centers, scales = {}, {}
    zeros = np.zeros(pop.size)
    base = {("$", q.name): zeros for q in step.real_actual}
    for p in step.real_actual:
        diff, var = step.probe[p.name]
        d = [
            _run(diff, pop, cfg, {**base, ("$", p.name): np.full(pop.size, y)})
            for y in (0.0, 1.0, 2.0)
        ]
        a = d[1] - d[0]
        bent = np.abs((d[2] - d[1]) - a) > 1e-9 * np.maximum(1.0, np.maximum(np.abs(d[0]), np.abs(d[2])))
        if np.any(a == 0.0) or np.any(bent):
            raise UnrecognizedLikelihoodForm(
                f"gauss atom of {step.decl.name} is not affine in outcome {p.name}"
            )
        v = _run(var, pop, cfg, base)
        if np.any(~(v > 0.0)):
            raise NonPositiveVariance(f"gauss variance in {step.decl.name} must be positive")
        centers[p.name] = -d[0] / a
        scales[p.name] = np.sqrt(v) / np.abs(a)
    return centers, scales


def _apply_effects(step: _StepProgram, pop: _Pop, cfg: EngineConfig) -> None:
    """Multiply in poss and likelihood, drop dead points, then progress the state."""
    if step.poss is not None:
        ok = _run(step.poss, pop, cfg) != 0.0
        pop.w = np.where(ok, pop.w, 0.0)
        pop.keep(pop.w > 0.0)
    if not step.lik.is_constant or step.lik.ir[1] != 1.0:
        lik = _run(step.lik, pop, cfg)
        if np.any(lik < 0.0):
            raise NegativeLikelihood(f"likelihood of {step.action} is negative at some point")
        pop.w = pop.w * lik
        pop.keep(pop.w > 0.0)
    new = dict(pop.now)
    for f, prog in step.ssa.items():
        val = _run(prog, pop, cfg)
        if f in step.domains and not np.isin(val, step.domains[f]).all():
            raise DomainViolation(f"{step.action} sets {f} outside its domain")
        new[f] = val
    pop.hist.append(new)
    pop.params = {}


# -- quadrature ------------------------------------------------------------------

def _int_root(cap: int, d: int) -> int:
    n = max(1, int(round(cap ** (1.0 / d))))
    while n ** d > cap:
        n -= 1
    while (n + 1) ** d <= cap:
        n += 1
    return n


def _equal_mass_axis(n: int, zlo: float, zhi: float) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints of ``n`` equal-probability cells of N(0,1) on [zlo, zhi], with dz per cell.

    Integrating g(z) dz over the truncated range becomes sum g(z_i) * w_i with
    ``w_i = du / phi(z_i)``; the upper half is computed from the upper tail so
    the grid stays symmetric.
    """
    lo_tail = special.ndtr(zlo)
    hi_tail = special.ndtr(-zhi)
    du = (1.0 - lo_tail - hi_tail) / n
    k = np.arange(n) + 0.5
    lower = lo_tail + k * du
    upper = hi_tail + (n - k) * du
    z = np.where(lower <= upper, special.ndtri(lower), -special.ndtri(upper))
    phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return z, du / phi


def _common_gauss(spec: TheorySpec) -> dict[str, tuple[float, float]]:
    """Real fluents carrying the same gauss factor in every branch of init_p: name -> (mean, sd)."""
    brs = init_branches(spec)
    out = {}
    for f in spec.real_fluents:
        params = {br.gauss.get(f.name) for br in brs if br.value_ok}
        if brs and all(br.value_ok for br in brs) and len(params) == 1 and None not in params:
            m, var = params.pop()
            out[f.name] = (m, math.sqrt(var))
    return out


class _QuadPlan:
    def __init__(self, spec: TheorySpec, steps: list[_StepProgram], cfg: EngineConfig):
        self.spec = spec
        self.steps = steps
        self.cfg = cfg
        cont_dims = len(spec.real_fluents) + sum(len(s.real_actual) for s in steps)
        if cont_dims > cfg.max_quad_dims:
            raise DimensionLimit(
                f"{cont_dims} continuous dimensions exceed max_quad_dims={cfg.max_quad_dims}"
            )
        self.cont_dims = cont_dims
        # the configured points are cell edges; integration uses the n cell midpoints
        n = max(1, cfg.quad_points_per_dim - 1)
        if cont_dims:
            n = min(n, _int_root(cfg.max_quad_nodes, cont_dims))
        self.n = n
        self.box = support_box(spec, cfg.gauss_truncation_sigmas)
        gauss = _common_gauss(spec)
        self.axes: list[np.ndarray] = []
        self.cellw: list[np.ndarray] = []
        self.names: list[str] = []
        self.layout: dict[str, str] = {}
        for f in spec.real_fluents:
            lo, hi = self.box[f.name]
            if f.name in gauss:
                m, sd = gauss[f.name]
                z, zw = _equal_mass_axis(n, (lo - m) / sd, (hi - m) / sd)
                self.axes.append(m + sd * z)
                self.cellw.append(sd * zw)
                self.layout[f.name] = "equal-mass"
            else:
                h = (hi - lo) / n
                self.axes.append(lo + (np.arange(n) + 0.5) * h)
                self.cellw.append(np.full(n, h))
                self.layout[f.name] = "uniform"
            self.names.append(f.name)
        for f in spec.finite_fluents:
            self.axes.append(np.array([v.code for v in f.domain.values], dtype=np.float64))
            self.cellw.append(np.ones(len(f.domain.values)))
            self.names.append(f.name)
        self.shape = tuple(len(a) for a in self.axes)
        self.total = int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1
        T = cfg.gauss_truncation_sigmas
        self.eps_axis, self.eps_w = _equal_mass_axis(n, -T, T)
        growth = 1
        for s in steps:
            growth *= n ** len(s.real_actual)
            growth *= int(np.prod([len(p.domain.values) for p in s.finite_actual], dtype=np.int64))
        self.growth = growth
        self.chunk = max(1, cfg.chunk_size // growth)

    def chunks(self) -> list[tuple[int, int]]:
        return [(s, min(s + self.chunk, self.total)) for s in range(0, self.total, self.chunk)]

    def initial(self, start: int, stop: int) -> _Pop:
        idx = np.unravel_index(np.arange(start, stop), self.shape) if self.shape else ()
        cols = {name: axis[i] for name, axis, i in zip(self.names, self.axes, idx)}
        cell = np.ones(stop - start)
        for cw, i in zip(self.cellw, idx):
            cell *= cw[i]
        pop = _Pop([cols], cell)
        init = kernels.compile_node(self.spec.init_p, _state_binding(), _sym_checker(self.spec))
        p0 = _run(init, pop, self.cfg)
        if np.any(p0 < 0.0):
            raise NegativeLikelihood("init_p is negative at some point")
        pop.w = p0 * pop.w
        pop.keep(pop.w > 0.0)
        return pop

    def expand(self, step: _StepProgram, pop: _Pop) -> None:
        if not step.decl.actual_params:
            return
        centers, scales = _outcome_frame(step, pop, self.cfg)
        grids = [np.arange(self.n, dtype=np.float64)] * len(step.real_actual)
        grids += [np.array([v.code for v in p.domain.values], dtype=np.float64) for p in step.finite_actual]
        combos = np.array(list(itertools.product(*grids)), dtype=np.float64)
        k = combos.shape[0]
        m = pop.size
        pop.repeat(k)
        jac = np.ones(m * k)
        for j, p in enumerate(step.real_actual):
            c = np.repeat(centers[p.name], k)
            s = np.repeat(scales[p.name], k)
            i = np.tile(combos[:, j].astype(np.intp), m)
            pop.params[p.name] = c + s * self.eps_axis[i]
            jac *= s * self.eps_w[i]
        off = len(step.real_actual)
        for j, p in enumerate(step.finite_actual):
            pop.params[p.name] = np.tile(combos[:, off + j], m)
        pop.w = pop.w * jac

    def population(self, start: int, stop: int) -> _Pop:
        pop = self.initial(start, stop)
        for step in self.steps:
            if pop.size == 0:
                break
            self.expand(step, pop)
            _apply_effects(step, pop, self.cfg)
        return pop

    def diagnostics(self) -> dict[str, Any]:
        return {
            "points_per_dim": self.n + 1,
            "cells_per_dim": self.n,
            "continuous_dims": self.cont_dims,
            "initial_nodes": self.total,
            "support": {k: list(v) for k, v in self.box.items()},
            "layout": dict(self.layout),
            "trunc_sigmas": self.cfg.gauss_truncation_sigmas,
            "truncation_error_per_dim": math.erfc(self.cfg.gauss_truncation_sigmas / math.sqrt(2.0)),
            "chunks": len(self.chunks()),
        }


# -- Monte Carlo ---------------------------------------------------------------------

class _MCPlan:
    def __init__(self, spec: TheorySpec, steps: list[_StepProgram], cfg: EngineConfig):
        self.spec = spec
        self.steps = steps
        self.cfg = cfg
        for s in steps:
            if s.real_actual and s.finite_actual:
                raise UnrecognizedLikelihoodForm(
                    f"{s.decl.name} mixes finite and continuous outcomes; use the quad backend"
                )
        self.sampler = InitSampler.build(spec, cfg.gauss_truncation_sigmas)
        N, c = cfg.mc_samples, cfg.mc_chunk_size
        self.sizes = [min(c, N - s) for s in range(0, N, c)]
        self.seeds = np.random.SeedSequence(cfg.seed).spawn(len(self.sizes))

    def chunks(self) -> list[int]:
        return list(range(len(self.sizes)))

    def population(self, i: int) -> _Pop:
        rng = np.random.default_rng(self.seeds[i])
        m = self.sizes[i]
        cols = self.sampler.sample(m, rng)
        pop = _Pop([cols], np.full(m, self.sampler.total_mass))
        if not self.sampler.exact:
            init = kernels.compile_node(self.spec.init_p, _state_binding(), _sym_checker(self.spec))
            p0 = _run(init, pop, self.cfg)
            if np.any(p0 < 0.0):
                raise NegativeLikelihood("init_p is negative at some point")
            pop.w = pop.w * p0
        pop.keep(pop.w > 0.0)
        for step in self.steps:
            if pop.size == 0:
                break
            self._outcomes(step, pop, rng)
            _apply_effects(step, pop, self.cfg)
        return pop

    def _outcomes(self, step: _StepProgram, pop: _Pop, rng: np.random.Generator) -> None:
        if step.real_actual:
            centers, scales = _outcome_frame(step, pop, self.cfg)
            logq = np.zeros(pop.size)
            for p in step.real_actual:
                eps = rng.standard_normal(pop.size)
                c, s = centers[p.name], scales[p.name]
                pop.params[p.name] = c + s * eps
                logq += -0.5 * eps * eps - np.log(s) - 0.5 * math.log(2.0 * math.pi)
            # the likelihood is multiplied in by _apply_effects
            pop.w = pop.w * np.exp(-logq)
        elif step.finite_actual:
            combos = list(itertools.product(*(p.domain.values for p in step.finite_actual)))
            t = np.empty((pop.size, len(combos)))
            for j, combo in enumerate(combos):
                for p, v in zip(step.finite_actual, combo):
                    pop.params[p.name] = np.full(pop.size, float(v.code))
                lik = _run(step.lik, pop, self.cfg)
                if np.any(lik < 0.0):
                    raise NegativeLikelihood(f"likelihood of {step.action} is negative at some point")
                if step.poss is not None:
                    lik = np.where(_run(step.poss, pop, self.cfg) != 0.0, lik, 0.0)
                t[:, j] = lik
            total = t.sum(axis=1)
            cum = np.cumsum(t, axis=1)
            u = rng.random(pop.size) * total
            pick = np.minimum((cum <= u[:, None]).sum(axis=1), len(combos) - 1)
            codes = np.array([[float(v.code) for v in c] for c in combos])
            for j, p in enumerate(step.finite_actual):
                pop.params[p.name] = codes[pick, j]
            lik_pick = t[np.arange(pop.size), pick]
            # divide by the chosen likelihood so _apply_effects leaves total(t) behind
            with np.errstate(divide="ignore", invalid="ignore"):
                pop.w = np.where(lik_pick > 0.0, pop.w * total / lik_pick, 0.0)
            pop.keep(pop.w > 0.0)

    def diagnostics(self) -> dict[str, Any]:
        return {
            "samples": self.cfg.mc_samples,
            "seed": self.cfg.seed,
            "chunks": len(self.sizes),
            "init_proposal": "exact" if self.sampler.exact else "uniform-box",
        }


# -- driver ----------------------------------------------------------------------------

def _plan(spec: TheorySpec, alpha: Sequence[GroundAction], cfg: EngineConfig):
    steps = [_StepProgram(spec, a) for a in alpha]
    return (_QuadPlan if cfg.backend == QUAD else _MCPlan)(spec, steps, cfg)


def _map_chunks(plan, cfg: EngineConfig, reduce: Callable[[_Pop], Any]) -> list[Any]:
    def task(c):
        return reduce(plan.population(*c) if isinstance(c, tuple) else plan.population(c))

    chunks = plan.chunks()
    workers = min(cfg.workers(), len(chunks))
    if workers <= 1:
        return [task(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(task, chunks))


def _formula_program(spec: TheorySpec, phi: Formula, now: int):
    return kernels.compile_node(phi, _state_binding(now), _sym_checker(spec))


def resolve_config(spec: TheorySpec, q: Query | None, cfg: EngineConfig | None) -> EngineConfig:
    """Explicit ``cfg`` wins; otherwise theory config overlaid by query options."""
    if cfg is not None:
        return cfg
    base = theory_config(spec)
    return base.with_options(q.options) if q is not None else base


def bel_sums(spec: TheorySpec, phi: Formula, alpha: Sequence[GroundAction], cfg: EngineConfig):
    """Ordered partial sums ``(sum w, sum w*I, sum w^2, sum w^2*I, n)`` per chunk."""
    plan = _plan(spec, alpha, cfg)
    prog = _formula_program(spec, phi, len(alpha))

    def reduce(pop: _Pop):
        if pop.size == 0:
            return (0.0, 0.0, 0.0, 0.0, 0)
        ind = _run(prog, pop, cfg)
        return (*kernels.weighted_sums(pop.w, ind, cfg.kernel), pop.size)

    return plan, _map_chunks(plan, cfg, reduce)


def bel(spec: TheorySpec, q: Query | Formula, cfg: EngineConfig | None = None,
        alpha: Sequence[GroundAction] = ()) -> BeliefResult:
    """Bel(phi, do(alpha, S0)). Accepts a Query or a bare formula plus ``alpha``."""
    if isinstance(q, Query):
        phi, alpha = q.formula, q.alpha
    else:
        phi, q = q, None
    cfg = resolve_config(spec, q, cfg)
    plan, parts = bel_sums(spec, phi, alpha, cfg)
    sw = math.fsum(p[0] for p in parts)
    swi = math.fsum(p[1] for p in parts)
    sw2 = math.fsum(p[2] for p in parts)
    sw2i = math.fsum(p[3] for p in parts)
    live = sum(p[4] for p in parts)
    if not sw > 0.0:
        raise DegenerateBelief(
            "the normalizer is zero: no point of positive weight survives "
            + (", ".join(map(str, alpha)) or "the initial density")
        )
    value = min(1.0, max(0.0, swi / sw))
    diag = plan.diagnostics()
    diag["live_points"] = live
    stderr = None
    if cfg.backend == MC:
        r = swi / sw
        var = (sw2i * (1.0 - 2.0 * r) + r * r * sw2) / (sw * sw)
        stderr = math.sqrt(max(var, 0.0))
        ess = sw * sw / sw2 if sw2 > 0 else 0.0
        diag["ess"] = ess
        diag["ess_fraction"] = ess / cfg.mc_samples
        diag["low_ess"] = ess < 0.1 * cfg.mc_samples
    return BeliefResult(value, swi, sw, stderr, cfg.backend, diag)


def knows(spec: TheorySpec, q: Query | Formula, cfg: EngineConfig | None = None,
          alpha: Sequence[GroundAction] = ()) -> KnowsResult:
    """True iff no point of positive weight falsifies phi."""
    if isinstance(q, Query):
        phi, alpha = q.formula, q.alpha
    else:
        phi, q = q, None
    cfg = resolve_config(spec, q, cfg)
    plan = _plan(spec, alpha, cfg)
    prog = _formula_program(spec, phi, len(alpha))

    def reduce(pop: _Pop):
        if pop.size == 0:
            return (0, 0)
        ind = _run(prog, pop, cfg)
        return (int(np.count_nonzero(ind == 0.0)), pop.size)

    parts = _map_chunks(plan, cfg, reduce)
    bad = sum(p[0] for p in parts)
    support = sum(p[1] for p in parts)
    if support == 0:
        raise DegenerateBelief("no point of positive weight survives " + (", ".join(map(str, alpha)) or "[]"))
    return KnowsResult(bad == 0, bad, support, cfg.backend, plan.diagnostics())


def marginal(spec: TheorySpec, fluent: str | Query, alpha: Sequence[GroundAction] = (),
             bins: int = 50, range: tuple[float, float] | None = None,
             cfg: EngineConfig | None = None) -> Histogram:
    """Histogram of a real fluent after ``alpha``, with atoms reported separately."""
    q = None
    if isinstance(fluent, Query):
        q = fluent
        fluent, alpha, bins, range = q.fluent, q.alpha, q.bins, q.range
    if not spec.fluent(fluent).is_real:
        raise FiniteFluentMarginal(f"{fluent} is finite; query bel ({fluent} = v) for each value instead")
    if bins < 1:
        raise ConfigError("bins must be >= 1")
    cfg = resolve_config(spec, q, cfg)
    plan = _plan(spec, alpha, cfg)
    parts = _map_chunks(plan, cfg, lambda pop: (pop.now[fluent].copy(), pop.w.copy()))
    vals = np.concatenate([p[0] for p in parts]) if parts else np.empty(0)
    w = np.concatenate([p[1] for p in parts]) if parts else np.empty(0)
    total = math.fsum(w)
    if not total > 0.0:
        raise DegenerateBelief("the normalizer is zero")
    uniq, inv, counts = np.unique(vals, return_inverse=True, return_counts=True)
    gmass = np.bincount(inv, weights=w) / total
    median = float(np.median(counts))
    is_atom = (gmass >= cfg.atom_threshold) & (counts >= 10 * median)
    atoms = tuple((float(uniq[i]), float(gmass[i])) for i in np.flatnonzero(is_atom))
    cont = ~is_atom[inv]
    cv, cw = vals[cont], w[cont]
    if range is None:
        if cv.size:
            lo, hi = float(cv.min()), float(cv.max())
        elif atoms:
            lo, hi = atoms[0][0], atoms[-1][0]
        else:
            lo, hi = 0.0, 1.0
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
    else:
        lo, hi = map(float, range)
        if not lo < hi:
            raise ConfigError("marginal range must have lo < hi")
    edges = np.linspace(lo, hi, bins + 1)
    masses, _ = np.histogram(cv, bins=edges, weights=cw)
    under = math.fsum(cw[cv < lo]) / total
    over = math.fsum(cw[cv > hi]) / total
    diag = plan.diagnostics()
    diag["atom_rule"] = f"mass >= {cfg.atom_threshold} and count >= 10 x median group size ({median:g})"
    return Histogram(fluent, edges, masses / total, atoms, under, over, cfg.backend, diag)


def answer(spec: TheorySpec, q: Query, cfg: EngineConfig | None = None):
    """Dispatch on the query kind."""
    if q.kind == BEL:
        return bel(spec, q, cfg)
    if q.kind == KNOWS:
        return knows(spec, q, cfg)
    if q.kind == MARGINAL:
        return marginal(spec, q, cfg=cfg)
    raise ValueError(f"unknown query kind {q.kind!r}")


__all__ = [
    "BeliefResult",
    "EngineConfig",
    "Histogram",
    "KnowsResult",
    "MC",
    "QUAD",
    "answer",
    "bel",
    "bel_sums",
    "knows",
    "marginal",
    "resolve_config",
    "theory_config",
]
