"""Isotropic Gaussian (Thomas) offspring kernel and its mass inside a window."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import NonPositiveBandwidth, ZeroSamples
from .geometry import Rectangle, Window

DEFAULT_MC_SAMPLES = 1000


@dataclass(frozen=True)
class KernelMassEstimate:
    value: float
    std_error: float = 0.0
    n_samples: int = 0

    @property
    def analytic(self) -> bool:
        return self.n_samples == 0


def _check_h(h):
    if not np.all(np.asarray(h) > 0):
        raise NonPositiveBandwidth(f"bandwidth must be positive, got {h}")


def gaussian_density(offset, h: float):
    """Bivariate N(0, h^2 I) density at ``offset`` (a vector or an (n, 2) array)."""
    _check_h(h)
    d = np.asarray(offset, dtype=float)
    r2 = np.sum(d * d, axis=-1)
    return np.exp(-r2 / (2.0 * h * h)) / (2.0 * math.pi * h * h)


def _interval_prob(lo, hi):
    # P(lo <= Z <= hi) for standard normal Z, evaluated in the tail that avoids cancellation
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    upper = lo > 0
    return np.where(upper, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))


def rect_masses(centers, h: float, w: Rectangle) -> np.ndarray:
    """Exact window mass of N(c, h^2 I) for every row c of ``centers``."""
    _check_h(h)
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    px = _interval_prob((w.xmin - c[:, 0]) / h, (w.xmax - c[:, 0]) / h)
    py = _interval_prob((w.ymin - c[:, 1]) / h, (w.ymax - c[:, 1]) / h)
    return px * py


def mass_rect(c, h: float, w: Rectangle) -> KernelMassEstimate:
    return KernelMassEstimate(float(rect_masses(c, h, w)[0]))


def mass_mc(c, h: float, w: Window, n_samples: int = DEFAULT_MC_SAMPLES, rng_seed=None) -> KernelMassEstimate:
    """Monte Carlo mass: fraction of N(c, h^2 I) draws that land in ``w``."""
    _check_h(h)
    if n_samples < 1:
        raise ZeroSamples("n_samples must be at least 1")
    rng = np.random.default_rng(rng_seed)
    draws = np.asarray(c, dtype=float) + h * rng.standard_normal((n_samples, 2))
    v = float(np.count_nonzero(w.contains(draws))) / n_samples
    return KernelMassEstimate(v, math.sqrt(v * (1.0 - v) / n_samples), n_samples)


def mc_masses(centers, h: float, w: Window, n_samples: int, rng_seed) -> np.ndarray:
    """Batched Monte Carlo masses.

    One stream per call, drawn in fixed center order, so the result is a
    pure function of ``(centers, h, w, n_samples, rng_seed)``.
    """
    _check_h(h)
    if n_samples < 1:
        raise ZeroSamples("n_samples must be at least 1")
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    if len(c) == 0:
        return np.zeros(0)
    rng = np.random.default_rng(rng_seed)
    z = rng.standard_normal((len(c), n_samples, 2))
    pts = c[:, None, :] + h * z
    inside = w.contains(pts.reshape(-1, 2)).reshape(len(c), n_samples)
    return inside.mean(axis=1)


def window_masses(centers, h: float, w: Window, n_samples: int = DEFAULT_MC_SAMPLES,
                  rng_seed=None, method: str = "auto") -> np.ndarray:
    """Window masses for many centers: analytic for rectangles unless ``method='mc'``."""
    if method not in ("auto", "analytic", "mc"):
        raise ValueError(f"unknown mass method {method!r}")
    if method != "mc" and isinstance(w, Rectangle):
        return rect_masses(centers, h, w)
    if method == "analytic":
        raise ValueError("analytic masses are only available for rectangles")
    return mc_masses(centers, h, w, n_samples, rng_seed)
