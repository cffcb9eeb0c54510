"""Goodness-of-fit counts and the Thomas-process minimum-contrast baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize

from .errors import TooFewPoints
from .geometry import Rectangle, Window
from .kernel import DEFAULT_MC_SAMPLES
from .likelihood import kernel_masses
from .model import ModelGraph, ParamVector, Role
from .patterns import MultitypePattern


@dataclass
class CountRow:
    observed: int
    expected: float
    ratio: float | None  # None when expected == 0

    def to_dict(self):
        return {"observed": self.observed, "expected": self.expected, "ratio": self.ratio}


@dataclass
class CountValidation:
    rows: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {t: r.to_dict() for t, r in self.rows.items()}


def expected_counts(pattern: MultitypePattern, graph: ModelGraph, params: ParamVector,
                    n_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> CountValidation:
    """Model-implied count per taxon.

    lambda * |W| for homogeneous taxa; alpha_l * sum_c mass_l(c) over the
    observed parents for offspring taxa.
    """
    area = pattern.window.area
    masses = kernel_masses(pattern, graph, params.bandwidth, n_samples=n_samples, seed=seed)
    out = CountValidation()
    for t in graph.taxa:
        role = graph.roles[t]
        if role == Role.PARENT:
            exp = params.lambda_parent[t] * area
        elif role == Role.UNRELATED:
            exp = params.lambda_unrelated[t] * area
        else:
            exp = params.alpha[t] * float(np.sum(masses[t]))
        obs = pattern.count(t)
        out.rows[t] = CountRow(obs, exp, obs / exp if exp > 0 else None)
    return out


def _single_type(pattern: MultitypePattern, taxon=None) -> np.ndarray:
    if taxon is not None:
        return pattern.points(taxon)
    if len(pattern.taxa) > 1:
        raise ValueError("pattern has several taxa; pass taxon=")
    return pattern.coords


def ripley_k(pattern: MultitypePattern, r, taxon=None) -> np.ndarray:
    """Ripley's K estimate at each radius in ``r``.

    Rectangles use the translation correction
    ``|W| / ((width - |dx|)(height - |dy|))``; convex polygons fall back to
    the border (reduced-sample) correction.
    """
    pts = _single_type(pattern, taxon)
    n = len(pts)
    if n < 2:
        raise TooFewPoints(f"need at least 2 points, got {n}")
    r = np.asarray(r, dtype=float)
    w = pattern.window
    area = w.area
    i, j = np.triu_indices(n, k=1)
    dx = pts[i, 0] - pts[j, 0]
    dy = pts[i, 1] - pts[j, 1]
    d = np.hypot(dx, dy)
    rmax = float(np.max(r)) if r.size else 0.0
    if isinstance(w, Rectangle):
        keep = d <= rmax
        d, dx, dy = d[keep], np.abs(dx[keep]), np.abs(dy[keep])
        weight = area / ((w.xmax - w.xmin - dx) * (w.ymax - w.ymin - dy))
        order = np.argsort(d, kind="stable")
        cum = np.concatenate([[0.0], np.cumsum(weight[order])])
        hits = np.searchsorted(d[order], r, side="right")
        # each unordered pair counts for (i, j) and (j, i)
        return 2.0 * area * cum[hits] / (n * (n - 1))
    return _border_k(pts, w, r, i, j, d)


def _border_k(pts, w: Window, r, i, j, d):
    n = len(pts)
    lam = (n - 1) / w.area
    b = w.boundary_distance(pts)
    out = np.full(r.shape, np.nan)
    for k, rk in enumerate(r.ravel()):
        ok = b >= rk
        m = int(ok.sum())
        if m == 0:
            continue
        close = d <= rk
        pairs = np.count_nonzero(close & ok[i]) + np.count_nonzero(close & ok[j])
        out.flat[k] = pairs / (lam * m)
    return out


def _r_grid(w: Window, r_range, n_r: int) -> np.ndarray:
    # default range (0, shorter side / 4]; r = 0 itself carries no information
    if r_range is None:
        xmin, xmax, ymin, ymax = w.bbox
        r_range = (0.0, min(xmax - xmin, ymax - ymin) / 4.0)
    r = np.linspace(r_range[0], r_range[1], n_r + 1)
    return r[1:] if r[0] <= 0 else r


def thomas_k(r, kappa: float, sigma: float):
    """K function of a Thomas process with parent intensity kappa and scatter sd sigma."""
    r = np.asarray(r, dtype=float)
    return math.pi * r ** 2 + (1.0 - np.exp(-r ** 2 / (4.0 * sigma ** 2))) / kappa


@dataclass
class ThomasFit:
    kappa: float
    sigma: float
    mu: float
    converged: bool
    objective: float
    message: str = ""

    def to_dict(self):
        return {"kappa": self.kappa, "sigma": self.sigma, "mu": self.mu,
                "converged": self.converged, "objective": self.objective, "message": self.message}


class _Contrast:
    def __init__(self, r, k_hat, q):
        self.r = r
        self.q = q
        self.target = np.maximum(k_hat, 0.0) ** q

    def __call__(self, log_kappa, log_sigma):
        kappa, sigma = np.exp(log_kappa), np.exp(log_sigma)
        k = math.pi * self.r ** 2 + (1.0 - np.exp(-self.r ** 2 / (4.0 * sigma[..., None] ** 2))) / kappa[..., None]
        return trapezoid((self.target - k ** self.q) ** 2, self.r, axis=-1)


def default_bounds(pattern_n: int, window: Window, r_max: float) -> tuple:
    """Search box: kappa in [1/|W|, 1000 n/|W|], sigma in [r_max/1000, shorter side]."""
    xmin, xmax, ymin, ymax = window.bbox
    side = min(xmax - xmin, ymax - ymin)
    area = window.area
    return (1.0 / area, 1000.0 * max(pattern_n, 1) / area), (r_max / 1000.0, side)


def thomas_min_contrast(pattern: MultitypePattern, r_range=None, q: float = 0.25, taxon=None,
                        n_r: int = 128, bounds=None, grid: int = 24) -> ThomasFit:
    """Fit (kappa, sigma) of a Thomas process by minimum contrast on K.

    Minimises the integral over ``r_range`` of ``(K_hat(r)^q - K(r)^q)^2`` with a
    coarse log-scale grid followed by bounded Nelder-Mead from the best grid
    cells. A fit whose optimum sits on a search bound, or whose optimiser
    fails, is reported with ``converged=False`` instead of raising.
    """
    pts = _single_type(pattern, taxon)
    n = len(pts)
    w = pattern.window
    r = _r_grid(w, r_range, n_r)
    r_hi = float(r[-1])
    nan_fit = ThomasFit(math.nan, math.nan, math.nan, False, math.inf)
    if n < 2:
        nan_fit.message = "too few points"
        return nan_fit
    k_hat = ripley_k(MultitypePattern.from_groups(w, {"_": pts}), r)
    if not np.all(np.isfinite(k_hat)):
        nan_fit.message = "K estimate undefined on r_range"
        return nan_fit
    (k_lo, k_hi), (s_lo, s_hi) = bounds or default_bounds(n, w, r_hi)
    lb = np.log([k_lo, s_lo])
    ub = np.log([k_hi, s_hi])
    f = _Contrast(r, k_hat, q)

    gk, gs = np.meshgrid(np.linspace(lb[0], ub[0], grid), np.linspace(lb[1], ub[1], grid), indexing="ij")
    vals = f(gk, gs)
    starts = np.argsort(vals, axis=None, kind="stable")[:3]
    best = None
    for s in starts:
        x0 = np.array([gk.flat[s], gs.flat[s]])
        res = minimize(lambda x: float(f(x[:1], x[1:])[0]), x0, method="Nelder-Mead",
                       bounds=list(zip(lb, ub)),
                       options={"xatol": 1e-10, "fatol": 1e-16, "maxiter": 4000, "maxfev": 8000})
        if best is None or res.fun < best.fun:
            best = res
    log_k, log_s = best.x
    on_bound = bool(np.any(np.abs(best.x - lb) <= 1e-6) or np.any(np.abs(ub - best.x) <= 1e-6))
    kappa, sigma = float(np.exp(log_k)), float(np.exp(log_s))
    msg = "optimum on search bound" if on_bound else ("" if best.success else str(best.message))
    return ThomasFit(kappa, sigma, n / (kappa * w.area), bool(best.success and not on_bound),
                     float(best.fun), msg)


def contrast_objective(pattern: MultitypePattern, kappa: float, sigma: float, r_range=None,
                       q: float = 0.25, taxon=None, n_r: int = 128) -> float:
    """The minimum-contrast objective at a given (kappa, sigma)."""
    pts = _single_type(pattern, taxon)
    w = pattern.window
    r = _r_grid(w, r_range, n_r)
    k_hat = ripley_k(MultitypePattern.from_groups(w, {"_": pts}), r)
    f = _Contrast(r, k_hat, q)
    return float(f(np.array([math.log(kappa)]), np.array([math.log(sigma)]))[0])


def poisson_objective(pattern: MultitypePattern, r_range=None, q: float = 0.25, taxon=None,
                      n_r: int = 128) -> float:
    """Objective of the CSR fit K(r) = pi r^2 (the kappa -> infinity limit)."""
    pts = _single_type(pattern, taxon)
    w = pattern.window
    r = _r_grid(w, r_range, n_r)
    k_hat = ripley_k(MultitypePattern.from_groups(w, {"_": pts}), r)
    return float(trapezoid((np.maximum(k_hat, 0) ** q - (math.pi * r ** 2) ** q) ** 2, r))
