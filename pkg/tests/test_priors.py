import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from macpp.model import ParamVector
from macpp.priors import (PRESETS, Gamma, HalfNormal, LogNormal, PriorSpec, Uniform, bandwidth_prior_from_dict,
                          half_normal_sigma_for_quantile, log_prior)


def test_half_normal_mode_density():
    assert HalfNormal(1.0).logpdf(0.0) == pytest.approx(math.log(math.sqrt(2 / math.pi)))
    assert HalfNormal(1.0).logpdf(0.0) == pytest.approx(-0.22579, abs=1e-5)


def test_uniform_support():
    assert Uniform(0, 0.2).logpdf(0.25) == -math.inf
    assert Uniform(0, 0.2).logpdf(0.1) == pytest.approx(-math.log(0.2))


def test_gamma_log_density_with_mpmath_lgamma():
    expected = -0.01 + 0.01 * math.log(0.01) - float(mp.loggamma(mp.mpf("0.01")))
    assert Gamma(0.01, 0.01).logpdf(1.0) == pytest.approx(expected, rel=1e-14)
    assert Gamma(0.01, 0.01).logpdf(0.0) == -math.inf


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 50), st.floats(0.01, 50), st.floats(1e-3, 100))
def test_gamma_logpdf_matches_scipy(shape, rate, x):
    assert Gamma(shape, rate).logpdf(x) == pytest.approx(stats.gamma(shape, scale=1 / rate).logpdf(x), rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 10), st.floats(1e-4, 20))
def test_family_logpdfs_match_scipy(s, h):
    assert HalfNormal(s).logpdf(h) == pytest.approx(stats.halfnorm(scale=s).logpdf(h), rel=1e-9, abs=1e-9)
    assert LogNormal(math.log(0.05), s).logpdf(h) == pytest.approx(
        stats.lognorm(s, scale=0.05).logpdf(h), rel=1e-9, abs=1e-9)


def test_sigma_for_quantile():
    assert half_normal_sigma_for_quantile(0.05, 0.99) == pytest.approx(0.0194, abs=1e-4)
    assert half_normal_sigma_for_quantile(5, 0.99) == pytest.approx(1.941, abs=1e-3)
    assert half_normal_sigma_for_quantile(1, 0.5) == pytest.approx(1.4826, abs=1e-4)
    # the rounded value 0.02 puts its 99th percentile near 0.05
    assert float(HalfNormal(0.02).quantile(0.99)) == pytest.approx(0.0515, abs=1e-4)
    with pytest.raises(ValueError):
        half_normal_sigma_for_quantile(1, 1.0)


@pytest.mark.parametrize("name", list(PRESETS))
def test_preset_quantiles_match_scipy(name):
    prior = bandwidth_prior_from_dict(name)
    ref = {
        "half_normal": stats.halfnorm(scale=0.02),
        "uniform": stats.uniform(0, 0.2),
        "lognormal_flat": stats.lognorm(1.0, scale=0.05),
        "lognormal_tight": stats.lognorm(0.1, scale=0.05),
    }[name]
    p = np.array([0.1, 0.5, 0.9])
    assert np.allclose(prior.quantile(p), ref.ppf(p), rtol=1e-12)
    draws = prior.sample(np.random.default_rng(0), 20000)
    assert stats.kstest(draws, ref.cdf).statistic < 0.02


def test_log_prior_sums_components():
    spec = PriorSpec()
    pv = ParamVector({"B": 1.5}, {"B": 0.01}, {"A": 150.0}, {"D": 95.0})
    expected = (Gamma(0.01, 0.01).logpdf(1.5) + HalfNormal(0.02).logpdf(0.01)
                + Gamma(0.01, 0.01).logpdf(150.0) + Gamma(0.01, 0.01).logpdf(95.0))
    assert log_prior(pv, spec) == pytest.approx(expected)
    bad = ParamVector({"B": 1.5}, {"B": 0.3}, {"A": 150.0})
    assert log_prior(bad, PriorSpec(bandwidth_prior=Uniform(0, 0.2))) == -math.inf


def test_prior_spec_round_trip():
    spec = PriorSpec(Gamma(1, 2), Gamma(3, 4), Gamma(5, 6), LogNormal(-3.0, 0.5))
    assert PriorSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        bandwidth_prior_from_dict("nope")
    with pytest.raises(ValueError):
        Gamma(0, 1)
