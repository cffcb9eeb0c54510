"""MCMC for the cluster model.

Each sweep updates, in order: every offspring density alpha (conjugate
gamma), every parent-only intensity, every unrelated intensity (both
conjugate gamma), then every bandwidth by a random-walk Metropolis step.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InitializationError, RoleError
from .kernel import DEFAULT_MC_SAMPLES, window_masses
from .likelihood import KernelSums, parent_points
from .model import ModelGraph, ParamVector, Role
from .patterns import MultitypePattern
from .priors import Gamma, PriorSpec

QUANTILES = (0.025, 0.5, 0.975)
ACCEPTANCE_BAND = (0.05, 0.8)


@dataclass
class McmcConfig:
    n_iterations: int = 10_000
    n_burnin: int = 2_000
    thin: int = 1
    # per-offspring proposal sd, a single float for all, or None for prior median / 5
    proposal_sd: dict | float | None = None
    seed: int = 0
    n_chains: int = 1
    mc_integral_samples: int = DEFAULT_MC_SAMPLES
    # "auto": exact masses on rectangles, Monte Carlo otherwise; "mc" forces Monte Carlo
    mass_method: str = "auto"

    def __post_init__(self):
        if self.n_iterations < 1 or not 0 <= self.n_burnin < self.n_iterations:
            raise ValueError("need 0 <= n_burnin < n_iterations")
        if self.thin < 1 or self.n_chains < 1 or self.mc_integral_samples < 1:
            raise ValueError("thin, n_chains and mc_integral_samples must be >= 1")
        if self.mass_method not in ("auto", "mc"):
            raise ValueError(f"unknown mass_method {self.mass_method!r}")

    def proposal_sd_for(self, taxon: str, spec: PriorSpec) -> float:
        sd = self.proposal_sd
        if isinstance(sd, dict):
            sd = sd.get(taxon)
        if sd is None:
            return float(spec.bandwidth_prior.quantile(0.5)) / 5.0
        if not sd > 0:
            raise ValueError("proposal sd must be positive")
        return float(sd)

    def to_dict(self) -> dict:
        return asdict(self)


def gibbs_alpha(taxon: str, pattern: MultitypePattern, spec: PriorSpec, masses, rng=None):
    """Full conditional of the offspring density: Gamma(a_Y + n_l, b_Y + sum of masses)."""
    dist = Gamma(spec.gamma_alpha.shape + pattern.count(taxon),
                 spec.gamma_alpha.rate + float(np.sum(masses)))
    rng = rng if rng is not None else np.random.default_rng()
    return dist, float(dist.sample(rng))


def gibbs_lambda(taxon: str, pattern: MultitypePattern, graph: ModelGraph, spec: PriorSpec, rng=None):
    """Full conditional of a homogeneous intensity: Gamma(a + n, b + |W|)."""
    role = graph.roles[taxon]
    if role == Role.PARENT:
        prior = spec.gamma_parent
    elif role == Role.UNRELATED:
        prior = spec.gamma_unrelated
    else:
        raise RoleError(f"{taxon!r} is an offspring taxon; its intensity is not homogeneous")
    dist = Gamma(prior.shape + pattern.count(taxon), prior.rate + pattern.window.area)
    rng = rng if rng is not None else np.random.default_rng()
    return dist, float(dist.sample(rng))


@dataclass
class ChainState:
    alpha: dict
    h: dict
    lam: dict
    masses: dict  # per offspring: window mass of each parent's kernel at current h
    log_sums: dict  # per offspring: sum over its points of log sum_c k(y - c, h)

    def params(self, graph: ModelGraph) -> ParamVector:
        return ParamVector(dict(self.alpha), dict(self.h),
                           {t: self.lam[t] for t in graph.parents},
                           {t: self.lam[t] for t in graph.unrelated})


class _Target:
    """Data-dependent pieces of the bandwidth full conditional, precomputed once."""

    def __init__(self, pattern, graph, spec, config, chain):
        self.pattern, self.graph, self.spec, self.config = pattern, graph, spec, config
        self.chain = chain
        self.parents = {t: parent_points(pattern, graph, t) for t in graph.offspring}
        self.sums = {t: KernelSums(pattern.points(t), self.parents[t]) for t in graph.offspring}
        self.index = {t: i for i, t in enumerate(graph.offspring)}

    def masses(self, taxon, h, iteration):
        # iteration -1 (initialisation) maps to stream tag 0
        seed = [self.config.seed, self.chain, iteration + 1, self.index[taxon]]
        return window_masses(self.parents[taxon], h, self.pattern.window,
                             n_samples=self.config.mc_integral_samples, rng_seed=seed,
                             method=self.config.mass_method)


def mh_bandwidth(taxon: str, state: ChainState, target: _Target, proposal_sd: float,
                 rng: np.random.Generator, iteration: int = 0):
    """One random-walk Metropolis update of ``state.h[taxon]``; returns (h, accepted).

    The log acceptance ratio keeps only the h-dependent terms of the
    log-likelihood, -alpha * sum_c mass_c(h) + sum_y log sum_c k(y - c, h),
    plus the bandwidth log-prior. Non-positive proposals are rejected.
    """
    h = state.h[taxon]
    h_new = h + proposal_sd * rng.standard_normal()
    if h_new <= 0:
        return h, False
    prior = target.spec.bandwidth_prior
    lp_new = prior.logpdf(h_new)
    if lp_new == -math.inf:
        return h, False
    alpha = state.alpha[taxon]
    m_new = target.masses(taxon, h_new, iteration)
    ls_new = target.sums[taxon].total(h_new)
    log_r = (-alpha * (float(np.sum(m_new)) - float(np.sum(state.masses[taxon])))
             + (ls_new - state.log_sums[taxon])
             + (lp_new - prior.logpdf(h)))
    if math.isnan(log_r) or ls_new == -math.inf:
        return h, False
    if log_r >= 0 or rng.random() < math.exp(log_r):
        state.h[taxon] = h_new
        state.masses[taxon] = m_new
        state.log_sums[taxon] = ls_new
        return h_new, True
    return h, False


def initial_state(target: _Target) -> ChainState:
    pattern, graph, spec = target.pattern, target.graph, target.spec
    area = pattern.window.area
    h0 = float(spec.bandwidth_prior.quantile(0.5))
    alpha, h, lam, masses, log_sums = {}, {}, {}, {}, {}
    for t in graph.parents + graph.unrelated:
        n = pattern.count(t)
        prior = spec.gamma_parent if graph.roles[t] == Role.PARENT else spec.gamma_unrelated
        # an empty taxon starts at its conditional mean rather than at zero
        lam[t] = n / area if n else prior.shape / (prior.rate + area)
    for t in graph.offspring:
        n_par = len(target.parents[t])
        alpha[t] = pattern.count(t) / max(n_par, 1)
        h[t] = h0
        masses[t] = target.masses(t, h0, -1)
        log_sums[t] = target.sums[t].total(h0)
        if not math.isfinite(log_sums[t]):
            raise InitializationError(
                f"offspring taxon {t!r} has {pattern.count(t)} point(s) but its parent taxon "
                f"{graph.parent_of[t]!r} has none: log-likelihood is -inf")
    return ChainState(alpha, h, lam, masses, log_sums)


@dataclass
class PosteriorSamples:
    draws: dict
    acceptance_rate: dict
    seed: int = 0
    chain: int = 0
    config: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return len(next(iter(self.draws.values()))) if self.draws else 0

    def summaries(self) -> dict:
        out = {}
        for name, x in self.draws.items():
            q = np.quantile(x, QUANTILES)
            out[name] = {"mean": float(np.mean(x)), "sd": float(np.std(x, ddof=1)) if len(x) > 1 else 0.0,
                         "q2.5": float(q[0]), "q50": float(q[1]), "q97.5": float(q[2])}
        return out

    def means(self) -> dict:
        return {k: float(np.mean(v)) for k, v in self.draws.items()}

    def flags(self) -> list[str]:
        lo, hi = ACCEPTANCE_BAND
        return [f"acceptance rate for h[{t}] = {r:.3f} outside ({lo}, {hi})"
                for t, r in self.acceptance_rate.items() if not lo < r < hi]

    def write_csv(self, path) -> Path:
        path = Path(path)
        names = list(self.draws)
        cols = [self.draws[n].tolist() for n in names]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in zip(*cols):
                w.writerow([repr(v) for v in row])
        return path

    @classmethod
    def read_csv(cls, path, **kw) -> "PosteriorSamples":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        names = rows[0]
        data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(names))
        return cls({n: data[:, i] for i, n in enumerate(names)}, kw.pop("acceptance_rate", {}), **kw)


def _summary_6g(summ: dict) -> dict:
    return {k: {s: float(f"{v:.6g}") for s, v in d.items()} for k, d in summ.items()}


def run_chain(pattern: MultitypePattern, graph: ModelGraph, spec: PriorSpec, config: McmcConfig,
              chain: int = 0) -> PosteriorSamples:
    """Run one chain; deterministic in ``(config.seed, chain)``."""
    target = _Target(pattern, graph, spec, config, chain)
    state = initial_state(target)
    rng = np.random.default_rng([config.seed, chain])
    area = pattern.window.area
    offspring, homog = graph.offspring, graph.parents + graph.unrelated
    # conjugate parameters that do not change across sweeps
    lam_dist = {}
    for t in homog:
        prior = spec.gamma_parent if graph.roles[t] == Role.PARENT else spec.gamma_unrelated
        lam_dist[t] = (prior.shape + pattern.count(t), 1.0 / (prior.rate + area))
    a_shape = {t: spec.gamma_alpha.shape + pattern.count(t) for t in offspring}
    prop_sd = {t: config.proposal_sd_for(t, spec) for t in offspring}

    names = ([f"alpha[{t}]" for t in offspring] + [f"h[{t}]" for t in offspring]
             + [f"lambda[{t}]" for t in graph.parents] + [f"lambda[{t}]" for t in graph.unrelated])
    n_keep = len(range(config.n_burnin, config.n_iterations, config.thin))
    out = np.empty((n_keep, len(names)))
    accepted = dict.fromkeys(offspring, 0)
    k = 0
    for it in range(config.n_iterations):
        for t in offspring:
            rate = spec.gamma_alpha.rate + float(np.sum(state.masses[t]))
            state.alpha[t] = float(rng.gamma(a_shape[t], 1.0 / rate))
        for t in homog:
            shape, scale = lam_dist[t]
            state.lam[t] = float(rng.gamma(shape, scale))
        for t in offspring:
            _, ok = mh_bandwidth(t, state, target, prop_sd[t], rng, it)
            accepted[t] += ok
        if it >= config.n_burnin and (it - config.n_burnin) % config.thin == 0:
            out[k] = ([state.alpha[t] for t in offspring] + [state.h[t] for t in offspring]
                      + [state.lam[t] for t in homog])
            k += 1
    return PosteriorSamples(
        draws={n: out[:, i].copy() for i, n in enumerate(names)},
        acceptance_rate={t: accepted[t] / config.n_iterations for t in offspring},
        seed=config.seed, chain=chain, config=config.to_dict(),
    )


def run_chains(pattern, graph, spec, config: McmcConfig, workers: int = 1) -> list[PosteriorSamples]:
    """Run ``config.n_chains`` independent chains, optionally in a process pool."""
    if workers <= 1 or config.n_chains == 1:
        return [run_chain(pattern, graph, spec, config, c) for c in range(config.n_chains)]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(run_chain, pattern, graph, spec, config, c) for c in range(config.n_chains)]
        return [f.result() for f in futs]


def combine(chains: list[PosteriorSamples]) -> PosteriorSamples:
    draws = {n: np.concatenate([c.draws[n] for c in chains]) for n in chains[0].draws}
    acc = {t: float(np.mean([c.acceptance_rate[t] for c in chains])) for t in chains[0].acceptance_rate}
    return PosteriorSamples(draws, acc, seed=chains[0].seed, chain=-1, config=chains[0].config)


def potential_scale_reduction(chains) -> float:
    """Gelman-Rubin R-hat for one parameter from equal-length chains (list of 1-D arrays)."""
    x = np.asarray(chains, dtype=float)
    m, n = x.shape
    if m < 2 or n < 2:
        raise ValueError("need at least two chains of length >= 2")
    w = x.var(axis=1, ddof=1).mean()
    b = n * x.mean(axis=1).var(ddof=1)
    if w == 0:
        return 1.0 if b == 0 else math.inf
    var_hat = (n - 1) / n * w + b / n
    return float(math.sqrt(var_hat / w))


def rhat_all(chains: list[PosteriorSamples]) -> dict:
    return {n: potential_scale_reduction([c.draws[n] for c in chains]) for n in chains[0].draws}


def summary_report(chains: list[PosteriorSamples], extra: dict | None = None) -> dict:
    """JSON-ready summary: combined statistics at 6 significant digits plus per-chain details."""
    combined = combine(chains) if len(chains) > 1 else chains[0]
    report = {
        "summaries": _summary_6g(combined.summaries()),
        "acceptance_rate": {t: float(f"{r:.6g}") for t, r in combined.acceptance_rate.items()},
        "n_draws": combined.n_draws,
        "seed": combined.seed,
        "mcmc": combined.config,
        "flags": combined.flags(),
    }
    if len(chains) > 1:
        report["rhat"] = {k: float(f"{v:.6g}") for k, v in rhat_all(chains).items()}
        report["chains"] = [{"chain": c.chain,
                             "acceptance_rate": {t: float(f"{r:.6g}") for t, r in c.acceptance_rate.items()}}
                            for c in chains]
    if extra:
        report.update(extra)
    return report


def fit(pattern, graph, spec=None, config=None) -> PosteriorSamples:
    """Convenience wrapper: run all chains and pool their draws."""
    spec = spec or PriorSpec()
    config = config or McmcConfig()
    chains = run_chains(pattern, graph, spec, config)
    return combine(chains) if len(chains) > 1 else chains[0]


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
