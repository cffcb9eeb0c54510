"""Intensity field and log-likelihood of the superposed cluster process."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownTaxon
from .kernel import DEFAULT_MC_SAMPLES, gaussian_density, window_masses
from .model import ModelGraph, ParamVector, Role
from .patterns import MultitypePattern

# pairs whose kernel weight is below exp(-_TRUNC) of the nearest parent's are dropped
_TRUNC = 40.0


class KernelSums:
    """log sum_c k(y - c, h) for each offspring point y, as a function of h.

    Squared distances are fixed by the data, so they are computed once. The
    nearest-parent term is factored out (exact log-sum-exp shift), and pairs
    that are more than ``exp(-40)`` below it are skipped; this is exact to
    rounding and cheap when h is small relative to parent spacing.
    """

    def __init__(self, points, parents):
        y = np.asarray(points, dtype=float).reshape(-1, 2)
        c = np.asarray(parents, dtype=float).reshape(-1, 2)
        self.n_points = len(y)
        self.n_parents = len(c)
        if self.n_points == 0 or self.n_parents == 0:
            self._empty = True
            return
        self._empty = False
        d2 = ((y[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
        self.dmin2 = d2.min(axis=1)
        excess = (d2 - self.dmin2[:, None]).ravel()
        order = np.argsort(excess, kind="stable")
        self._excess = excess[order]
        self._rows = np.repeat(np.arange(self.n_points), self.n_parents)[order]

    def log_sums(self, h: float) -> np.ndarray:
        if self.n_points == 0:
            return np.zeros(0)
        if self._empty:
            return np.full(self.n_points, -np.inf)
        two_h2 = 2.0 * h * h
        k = np.searchsorted(self._excess, _TRUNC * two_h2, side="right")
        s = np.bincount(self._rows[:k], weights=np.exp(-self._excess[:k] / two_h2),
                        minlength=self.n_points)
        return np.log(s) - self.dmin2 / two_h2 - math.log(math.pi * two_h2)

    def total(self, h: float) -> float:
        return float(np.sum(self.log_sums(h)))


@dataclass
class LogLikelihoodBreakdown:
    total: float
    constant: float
    parent_terms: dict = field(default_factory=dict)
    offspring_terms: dict = field(default_factory=dict)
    unrelated_terms: dict = field(default_factory=dict)
    # (taxon, point index) of an offspring point with zero intensity, if any
    offending: tuple | None = None


def parent_points(pattern: MultitypePattern, graph: ModelGraph, taxon: str) -> np.ndarray:
    return pattern.points(graph.parent_of[taxon])


def intensity_at(s, taxon: str, pattern: MultitypePattern, graph: ModelGraph, params: ParamVector) -> float:
    """Intensity of ``taxon`` at location ``s`` given the observed parent points."""
    if taxon not in graph.roles:
        raise UnknownTaxon(taxon)
    role = graph.roles[taxon]
    if role == Role.PARENT:
        return float(params.lambda_parent[taxon])
    if role == Role.UNRELATED:
        return float(params.lambda_unrelated[taxon])
    parents = parent_points(pattern, graph, taxon)
    if len(parents) == 0:
        return 0.0
    dens = gaussian_density(np.asarray(s, dtype=float) - parents, params.bandwidth[taxon])
    return float(params.alpha[taxon] * np.sum(dens))


def kernel_masses(pattern: MultitypePattern, graph: ModelGraph, bandwidths: dict,
                  n_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0, method: str = "auto") -> dict:
    """Window mass of every parent's kernel, per offspring taxon."""
    out = {}
    for i, t in enumerate(graph.offspring):
        out[t] = window_masses(parent_points(pattern, graph, t), bandwidths[t], pattern.window,
                               n_samples=n_samples, rng_seed=[seed, i], method=method)
    return out


def offspring_term(alpha: float, mass_sum: float, log_sums: np.ndarray) -> float:
    """-alpha * sum_c mass(c) + sum_y log(alpha * sum_c k(y - c, h))."""
    n = len(log_sums)
    if n == 0:
        return -alpha * mass_sum
    if alpha <= 0:
        return -math.inf
    return -alpha * mass_sum + n * math.log(alpha) + float(np.sum(log_sums))


def log_likelihood(pattern: MultitypePattern, graph: ModelGraph, params: ParamVector,
                   kernel_masses: dict) -> LogLikelihoodBreakdown:
    area = pattern.window.area
    out = LogLikelihoodBreakdown(total=0.0, constant=area)
    for t in graph.parents:
        lam = params.lambda_parent[t]
        out.parent_terms[t] = -area * lam + _n_log(pattern.count(t), lam)
    for t in graph.offspring:
        sums = KernelSums(pattern.points(t), parent_points(pattern, graph, t))
        ls = sums.log_sums(params.bandwidth[t])
        term = offspring_term(params.alpha[t], float(np.sum(kernel_masses[t])), ls)
        if not np.isfinite(term) and out.offending is None and len(ls):
            bad = np.flatnonzero(~np.isfinite(ls))
            out.offending = (t, int(bad[0]) if len(bad) else 0)
        out.offspring_terms[t] = term
    for t in graph.unrelated:
        lam = params.lambda_unrelated[t]
        out.unrelated_terms[t] = -area * lam + _n_log(pattern.count(t), lam)
    # fixed summation order keeps totals bit-stable
    total = out.constant
    for terms in (out.parent_terms, out.offspring_terms, out.unrelated_terms):
        for t in sorted(terms, key=graph.taxa.index):
            total += terms[t]
    out.total = total
    return out


def _n_log(n: int, lam: float) -> float:
    return n * math.log(lam) if n else 0.0
