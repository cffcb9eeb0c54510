"""Prior families for the model parameters.

Gamma priors are shape-rate everywhere. Bandwidths get one of three
families: half-normal (scale of the underlying zero-mean normal), uniform,
or log-normal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .model import ParamVector

_LOG_SQRT_2_OVER_PI = 0.5 * math.log(2.0 / math.pi)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Gamma:
    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError(f"gamma hyperparameters must be positive: {self}")

    def logpdf(self, x: float) -> float:
        if not x > 0:
            return -math.inf
        a, b = self.shape, self.rate
        return (a - 1.0) * math.log(x) - b * x + a * math.log(b) - math.lgamma(a)

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def sample(self, rng: np.random.Generator, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)


@dataclass(frozen=True)
class HalfNormal:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("half-normal sigma must be positive")

    def logpdf(self, h: float) -> float:
        if h < 0:
            return -math.inf
        return _LOG_SQRT_2_OVER_PI - math.log(self.sigma) - 0.5 * (h / self.sigma) ** 2

    def quantile(self, p):
        return self.sigma * ndtri((1.0 + np.asarray(p)) / 2.0)

    def sample(self, rng, size=None):
        return np.abs(self.sigma * rng.standard_normal(size))

    def to_dict(self):
        return {"family": "half_normal", "sigma": self.sigma}


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo >= 0 and self.lo < self.hi):
            raise ValueError("uniform prior needs 0 <= lo < hi")

    def logpdf(self, h: float) -> float:
        if self.lo <= h <= self.hi:
            return -math.log(self.hi - self.lo)
        return -math.inf

    def quantile(self, p):
        return self.lo + (self.hi - self.lo) * np.asarray(p)

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)

    def to_dict(self):
        return {"family": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class LogNormal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("log-normal sigma must be positive")

    def logpdf(self, h: float) -> float:
        if not h > 0:
            return -math.inf
        z = (math.log(h) - self.mu) / self.sigma
        return -math.log(h) - math.log(self.sigma) - _LOG_SQRT_2PI - 0.5 * z * z

    def quantile(self, p):
        return np.exp(self.mu + self.sigma * ndtri(np.asarray(p)))

    def sample(self, rng, size=None):
        return np.exp(self.mu + self.sigma * rng.standard_normal(size))

    def to_dict(self):
        return {"family": "lognormal", "mu": self.mu, "sigma": self.sigma}


BandwidthPrior = HalfNormal | Uniform | LogNormal

PRESETS = {
    "half_normal": lambda: HalfNormal(0.02),
    "uniform": lambda: Uniform(0.0, 0.2),
    "lognormal_flat": lambda: LogNormal(math.log(0.05), 1.0),
    "lognormal_tight": lambda: LogNormal(math.log(0.05), 0.1),
}


def bandwidth_prior_from_dict(d) -> BandwidthPrior:
    if isinstance(d, str):
        try:
            return PRESETS[d]()
        except KeyError:
            raise ValueError(f"unknown bandwidth prior preset {d!r}") from None
    fam = d["family"]
    if fam == "half_normal":
        return HalfNormal(float(d["sigma"]))
    if fam == "uniform":
        return Uniform(float(d["lo"]), float(d["hi"]))
    if fam == "lognormal":
        return LogNormal(float(d["mu"]), float(d["sigma"]))
    raise ValueError(f"unknown bandwidth prior family {fam!r}")


@dataclass(frozen=True)
class PriorSpec:
    gamma_alpha: Gamma = field(default_factory=lambda: Gamma(0.01, 0.01))
    gamma_parent: Gamma = field(default_factory=lambda: Gamma(0.01, 0.01))
    gamma_unrelated: Gamma = field(default_factory=lambda: Gamma(0.01, 0.01))
    bandwidth_prior: BandwidthPrior = field(default_factory=lambda: HalfNormal(0.02))

    def to_dict(self) -> dict:
        g = lambda x: [x.shape, x.rate]  # noqa: E731
        return {"gamma_alpha": g(self.gamma_alpha), "gamma_parent": g(self.gamma_parent),
                "gamma_unrelated": g(self.gamma_unrelated),
                "bandwidth": self.bandwidth_prior.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PriorSpec":
        kw = {}
        for key in ("gamma_alpha", "gamma_parent", "gamma_unrelated"):
            if key in d:
                kw[key] = Gamma(*map(float, d[key]))
        if "bandwidth" in d:
            kw["bandwidth_prior"] = bandwidth_prior_from_dict(d["bandwidth"])
        return cls(**kw)


def log_prior(params: ParamVector, spec: PriorSpec) -> float:
    total = 0.0
    for a in params.alpha.values():
        total += spec.gamma_alpha.logpdf(a)
    for h in params.bandwidth.values():
        total += spec.bandwidth_prior.logpdf(h)
    for lam in params.lambda_parent.values():
        total += spec.gamma_parent.logpdf(lam)
    for lam in params.lambda_unrelated.values():
        total += spec.gamma_unrelated.logpdf(lam)
    return total


def half_normal_sigma_for_quantile(target: float, prob: float) -> float:
    """Scale sigma whose half-normal puts probability ``prob`` below ``target``."""
    if not (0.0 < prob < 1.0) or not target > 0:
        raise ValueError("need target > 0 and 0 < prob < 1")
    return float(target / ndtri((1.0 + prob) / 2.0))
