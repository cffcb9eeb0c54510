"""Simulation of the cluster model and the twelve benchmark scenarios."""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import Window, sample_uniform, unit_square
from .inference import McmcConfig, combine, run_chains
from .errors import MacppError
from .model import ModelGraph, ParamVector, Role, check, topo_order
from .patterns import MultitypePattern
from .priors import PriorSpec

log = logging.getLogger(__name__)

LAMBDA_PARENT = 150.0
LAMBDA_UNRELATED = 95.0
DENSITY = {"sparse": (1.5, 1.0), "dense": (4.0, 3.0), "mixed": (4.0, 1.0)}
BANDWIDTH = {"low": (0.01, 0.02), "high": (0.1, 0.01)}


def simulate_pattern(graph: ModelGraph, params: ParamVector, window: Window, rng_seed) -> MultitypePattern:
    """Draw one realisation.

    Homogeneous taxa: Poisson(lambda |W|) points, uniform in the window.
    Offspring taxa, in parent-first order: Poisson(alpha) points per realised
    parent, scattered N(c, h^2 I) and clipped to the window.
    """
    check(graph)
    params.check(graph)
    rng = np.random.default_rng(rng_seed)
    groups = {}
    for t in topo_order(graph):
        role = graph.roles[t]
        if role == Role.OFFSPRING:
            parents = groups[graph.parent_of[t]]
            n_per = rng.poisson(params.alpha[t], size=len(parents))
            centers = np.repeat(parents, n_per, axis=0)
            pts = centers + params.bandwidth[t] * rng.standard_normal(centers.shape)
            groups[t] = pts[window.contains(pts)] if len(pts) else pts.reshape(0, 2)
        else:
            lam = params.lambda_parent[t] if role == Role.PARENT else params.lambda_unrelated[t]
            n = rng.poisson(lam * window.area)
            groups[t] = sample_uniform(window, n, rng)
    return MultitypePattern.from_groups(window, groups, taxa=graph.taxa)


@dataclass(frozen=True)
class Scenario:
    id: int
    unrelated_present: bool
    density: str
    bandwidth_level: str
    lambda_parent: float = LAMBDA_PARENT
    lambda_unrelated: float = LAMBDA_UNRELATED

    @property
    def alphas(self) -> tuple[float, float]:
        return DENSITY[self.density]

    @property
    def bandwidths(self) -> tuple[float, float]:
        return BANDWIDTH[self.bandwidth_level]

    def graph(self) -> ModelGraph:
        taxa = ("A", "B", "C") + (("D",) if self.unrelated_present else ())
        roles = {"A": Role.PARENT, "B": Role.OFFSPRING, "C": Role.OFFSPRING}
        if self.unrelated_present:
            roles["D"] = Role.UNRELATED
        return ModelGraph(taxa, roles, {"B": "A", "C": "A"})

    def params(self) -> ParamVector:
        (a2, a3), (h2, h3) = self.alphas, self.bandwidths
        return ParamVector({"B": a2, "C": a3}, {"B": h2, "C": h3}, {"A": self.lambda_parent},
                           {"D": self.lambda_unrelated} if self.unrelated_present else {})

    def window(self) -> Window:
        return unit_square()


def _build_scenarios():
    out = {}
    i = 1
    for unrelated in (False, True):
        for density in ("sparse", "dense", "mixed"):
            for bw in ("low", "high"):
                out[i] = Scenario(i, unrelated, density, bw)
                i += 1
    return out


SCENARIOS = _build_scenarios()


def get_scenario(sid: int) -> Scenario:
    try:
        return SCENARIOS[int(sid)]
    except (KeyError, ValueError):
        raise KeyError(f"unknown scenario {sid!r}; valid ids are 1..{len(SCENARIOS)}") from None


def dataset_seeds(seed: int, scenario_id: int, index: int) -> tuple[int, int]:
    """(simulation seed, chain seed) for one dataset of a scenario sweep."""
    ss = np.random.SeedSequence([seed, scenario_id, index])
    a, b = ss.generate_state(2, dtype=np.uint32)
    return int(a), int(b)


@dataclass
class DatasetResult:
    index: int
    ok: bool
    means: dict = field(default_factory=dict)
    sds: dict = field(default_factory=dict)
    acceptance: dict = field(default_factory=dict)
    error: str = ""
    nsp: dict = field(default_factory=dict)  # offspring taxon -> ThomasFit


def fit_dataset(scenario: Scenario, index: int, seed: int, spec: PriorSpec, mcmc: McmcConfig,
                with_nsp: bool = False, nsp_options: dict | None = None) -> DatasetResult:
    sim_seed, chain_seed = dataset_seeds(seed, scenario.id, index)
    graph = scenario.graph()
    pattern = simulate_pattern(graph, scenario.params(), scenario.window(), sim_seed)
    res = DatasetResult(index, ok=True)
    try:
        chains = run_chains(pattern, graph, spec, replace(mcmc, seed=chain_seed))
        post = combine(chains) if len(chains) > 1 else chains[0]
        summ = post.summaries()
        res.means = {k: v["mean"] for k, v in summ.items()}
        res.sds = {k: v["sd"] for k, v in summ.items()}
        res.acceptance = post.acceptance_rate
    except (MacppError, ArithmeticError, ValueError) as exc:
        res.ok, res.error = False, f"{type(exc).__name__}: {exc}"
    if with_nsp:
        from .diagnostics import thomas_min_contrast
        for t in graph.offspring:
            single = MultitypePattern.from_groups(pattern.window, {t: pattern.points(t)})
            res.nsp[t] = thomas_min_contrast(single, **(nsp_options or {}))
    return res


@dataclass
class ScenarioReport:
    scenario: Scenario
    truth: dict
    results: list
    with_nsp: bool = False

    @property
    def failure_fraction(self) -> float:
        return sum(not r.ok for r in self.results) / len(self.results)

    @property
    def nsp_failure_fraction(self) -> float:
        if not self.with_nsp:
            return float("nan")
        return sum(any(not f.converged for f in r.nsp.values()) for r in self.results) / len(self.results)

    def aggregate(self) -> dict:
        """Per parameter: EST (mean of posterior means), SD (mean posterior sd), SE (sd of means)."""
        ok = [r for r in self.results if r.ok]
        out = {}
        for name, true in self.truth.items():
            means = np.array([r.means[name] for r in ok])
            sds = np.array([r.sds[name] for r in ok])
            row = {"true": true, "est": _mean(means), "sd": _mean(sds),
                   "se": float(np.std(means, ddof=1)) if len(means) > 1 else float("nan"),
                   "n_ok": len(ok)}
            if self.with_nsp:
                row.update(self._nsp_row(name))
            out[name] = row
        return out

    def _nsp_row(self, name: str) -> dict:
        # min-contrast estimates on converged fits only
        vals = []
        for r in self.results:
            for t, f in r.nsp.items():
                if not f.converged:
                    continue
                if name == f"alpha[{t}]":
                    vals.append(f.mu)
                elif name == f"h[{t}]":
                    vals.append(f.sigma)
                elif name == "lambda[A]":
                    vals.append(f.kappa)
        vals = np.array(vals)
        return {"nsp_est": _mean(vals),
                "nsp_se": float(np.std(vals, ddof=1)) if len(vals) > 1 else float("nan"),
                "nsp_fail_pct": 100.0 * self.nsp_failure_fraction}

    def rows(self) -> list[dict]:
        return [{"scenario": self.scenario.id, "parameter": k, **v} for k, v in self.aggregate().items()]


def _mean(x):
    return float(np.mean(x)) if len(x) else float("nan")


def _pool_size() -> int:
    try:
        return max(1, int(os.environ.get("MACPP_THREADS", "1")))
    except ValueError:
        return 1


def run_scenario(scenario: Scenario, n_datasets: int, mcmc: McmcConfig, seed: int = 0,
                 spec: PriorSpec | None = None, with_nsp: bool = False,
                 nsp_options: dict | None = None, workers: int | None = None) -> ScenarioReport:
    if n_datasets < 2:
        raise ValueError("n_datasets must be at least 2")
    spec = spec or PriorSpec()
    workers = workers or _pool_size()
    args = [(scenario, i, seed, spec, mcmc, with_nsp, nsp_options) for i in range(n_datasets)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fit_star, args))
    else:
        results = [fit_dataset(*a) for a in args]
    results.sort(key=lambda r: r.index)
    for r in results:
        if not r.ok:
            log.warning("scenario %d dataset %d failed: %s", scenario.id, r.index, r.error)
    truth = scenario.params().flat(scenario.graph())
    return ScenarioReport(scenario, truth, results, with_nsp)


def _fit_star(a):
    return fit_dataset(*a)


REPORT_COLUMNS = ["scenario", "parameter", "true", "est", "sd", "se", "n_ok",
                  "nsp_est", "nsp_se", "nsp_fail_pct"]


def write_report_csv(reports: list[ScenarioReport], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n", restval="")
        w.writeheader()
        for rep in reports:
            for row in rep.rows():
                w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in row.items()})
    return path
