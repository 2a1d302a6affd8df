"""Monte Carlo proposals for initial points and action outcomes."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .analysis import InitBranch, decompose_init, outcome_gauss, support_box
from .dynamics import likelihood
from .errors import UnrecognizedInitForm, UnrecognizedLikelihoodForm
from .expr import Env, Sym, Value, WorldPoint, eval_expr
from .theory import ActionDecl, GroundAction, TheorySpec


def _gauss_mass(m: float, var: float, lo: float, hi: float) -> float:
    sd = math.sqrt(var)
    return float(special.ndtr((hi - m) / sd) - special.ndtr((lo - m) / sd))


def branch_mass(spec: TheorySpec, br: InitBranch) -> float:
    mass = br.const
    for f in spec.fluents:
        if f.is_real:
            lo, hi = br.interval(f.name)
            if f.name in br.gauss:
                mass *= _gauss_mass(*br.gauss[f.name], lo, hi)
            else:
                mass *= hi - lo
        else:
            mass *= len(br.allowed.get(f.name, f.domain.values))
    return mass


@dataclass
class InitSampler:
    """Batch sampler for the normalized initial density.

    ``exact`` samplers draw from ``init_p / Z`` and report the constant weight
    ``Z``.  Otherwise points are uniform on the support box and carry
    ``init_p(x) * volume``, which the caller must evaluate.
    """

    spec: TheorySpec
    branches: list[InitBranch] | None
    masses: np.ndarray | None
    box: dict[str, tuple[float, float]]

    @classmethod
    def build(cls, spec: TheorySpec, trunc_sigmas: float = 8.0) -> "InitSampler":
        try:
            brs = decompose_init(spec)
        except UnrecognizedInitForm:
            return cls(spec, None, None, support_box(spec, trunc_sigmas))
        masses = np.array([branch_mass(spec, b) for b in brs])
        return cls(spec, brs, masses, {})

    @property
    def exact(self) -> bool:
        return self.branches is not None

    @property
    def total_mass(self) -> float:
        """Z for exact samplers; the uniform proposal volume otherwise."""
        if self.exact:
            return math.fsum(self.masses)
        vol = 1.0
        for f in self.spec.fluents:
            if f.is_real:
                lo, hi = self.box[f.name]
                vol *= hi - lo
            else:
                vol *= len(f.domain.values)
        return vol

    def sample(self, m: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        """``m`` points as columns (symbols as codes)."""
        spec = self.spec
        cols: dict[str, np.ndarray] = {}
        if not self.exact:
            for f in spec.fluents:
                if f.is_real:
                    lo, hi = self.box[f.name]
                    cols[f.name] = rng.uniform(lo, hi, m)
                else:
                    codes = np.array([v.code for v in f.domain.values], dtype=np.float64)
                    cols[f.name] = codes[rng.integers(0, len(codes), m)]
            return cols
        p = self.masses / self.masses.sum()
        which = rng.choice(len(p), size=m, p=p)
        for f in spec.fluents:
            cols[f.name] = np.empty(m)
        for b, br in enumerate(self.branches):
            idx = np.flatnonzero(which == b)
            k = idx.size
            if k == 0:
                continue
            for f in spec.fluents:
                if f.is_real:
                    lo, hi = br.interval(f.name)
                    if f.name in br.gauss:
                        mu, var = br.gauss[f.name]
                        sd = math.sqrt(var)
                        a, z = (lo - mu) / sd, (hi - mu) / sd
                        vals = stats.truncnorm.rvs(a, z, loc=mu, scale=sd, size=k, random_state=rng)
                    else:
                        vals = rng.uniform(lo, hi, k)
                else:
                    allowed = sorted(br.allowed.get(f.name, f.domain.values), key=lambda s: s.code)
                    codes = np.array([s.code for s in allowed], dtype=np.float64)
                    vals = codes[rng.integers(0, len(codes), k)]
                cols[f.name][idx] = vals
        return cols


def sample_initial(spec: TheorySpec, rng: np.random.Generator) -> tuple[WorldPoint, float]:
    """One initial point and its proposal weight ``init_p(x) / q(x)``.

    Raises UnrecognizedInitForm when ``init_p`` has no exact sampler; callers
    fall back to the grid or to a uniform proposal.
    """
    sampler = InitSampler.build(spec)
    if not sampler.exact:
        raise UnrecognizedInitForm("init_p has no exact sampler; use the grid backend")
    cols = sampler.sample(1, rng)
    vals: list[Value] = []
    for f in spec.fluents:
        x = float(cols[f.name][0])
        vals.append(x if f.is_real else Sym.from_code(x))
    return WorldPoint(spec.fluent_names, vals), sampler.total_mass


def sample_outcome(spec: TheorySpec, decl: ActionDecl, nominal_args, w: WorldPoint,
                   rng: np.random.Generator) -> tuple[tuple[Value, ...], float]:
    """Draw actual arguments for ``decl`` at ``w``. Returns ``(outcome, importance weight)``.

    A single continuous actual parameter is drawn from its gauss atom and
    weighted by ``l / q``; finite actual parameters are drawn in proportion to
    the likelihood and weighted by the total likelihood.
    """
    if not decl.actual_params:
        return (), 1.0
    nominal = tuple(nominal_args)
    real = [p for p in decl.actual_params if p.is_real]
    if real and len(real) != len(decl.actual_params):
        raise UnrecognizedLikelihoodForm(f"{decl.name} mixes finite and continuous outcomes")
    params = {p.name: v for p, v in zip(decl.nominal_params, nominal)}
    if real:
        out: list[float] = []
        logq = 0.0
        for p in real:
            g = outcome_gauss(decl, p.name)

            def diff(y: float, _p=p.name, _g=g) -> float:
                env = Env((w,), {**params, **{q.name: 0.0 for q in real}, _p: y}, 0)
                return eval_expr(_g.arg, env) - eval_expr(_g.mean, env)

            d0, d1 = diff(0.0), diff(1.0)
            a = d1 - d0
            var = eval_expr(g.var, Env((w,), {**params, **{q.name: 0.0 for q in real}}, 0))
            center, sd = -d0 / a, math.sqrt(var) / abs(a)
            y = float(rng.normal(center, sd))
            out.append(y)
            logq += float(stats.norm.logpdf(y, center, sd))
        lik = likelihood(spec, w, GroundAction(decl.name, nominal, tuple(out)))
        return tuple(out), lik / math.exp(logq)
    combos = _finite_combos(decl)
    liks = np.array([likelihood(spec, w, GroundAction(decl.name, nominal, c)) for c in combos])
    total = float(liks.sum())
    if total == 0.0:
        return combos[0], 0.0
    k = int(rng.choice(len(combos), p=liks / total))
    return combos[k], total


def _finite_combos(decl: ActionDecl) -> list[tuple[Sym, ...]]:
    return list(itertools.product(*(p.domain.values for p in decl.actual_params)))


__all__ = ["InitSampler", "branch_mass", "sample_initial", "sample_outcome"]
