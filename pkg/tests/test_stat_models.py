import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from ldlsd.stat_models import (
    BinMixtureParams,
    DerivedShape,
    ModelError,
    derive_shape,
    noise_pdf,
    speech_pdf,
    spp_posterior,
)


def params(w1=0.5, mu0=0.5, sigma0=0.2, mu1=3.0, sigma1=1.0, **kw):
    return BinMixtureParams(1.0 - w1, w1, mu0, mu1, sigma0, sigma1, **kw)


def test_derive_shape_examples():
    assert derive_shape(params(mu0=1.0)).delta == pytest.approx(0.7978845608, rel=1e-9)
    sh = derive_shape(params(mu1=2.0, sigma1=1.0))
    assert (sh.beta_rate, sh.nu) == (2.0, 4.0)
    sh = derive_shape(params(mu1=1.0, sigma1=1.0))
    assert (sh.beta_rate, sh.nu) == (1.0, 1.0)


def test_derive_shape_frozen_nu_keeps_mean():
    sh = derive_shape(params(mu1=3.0, sigma1=0.1, nu_fixed=True, nu_value=2.0))
    assert sh.nu == 2.0
    assert sh.nu / sh.beta_rate == pytest.approx(3.0)


def test_derive_shape_rejects_zero_noise_mean():
    with pytest.raises(ModelError):
        derive_shape(params(mu0=0.0))


def test_params_check():
    with pytest.raises(ModelError):
        BinMixtureParams(0.6, 0.6, 1, 2, 1, 1).check()
    with pytest.raises(ModelError):
        BinMixtureParams(0.5, 0.5, 1, 2, 0.0, 1).check()
    params().check()


def test_noise_pdf_points():
    sh = DerivedShape(delta=0.8, beta_rate=1.0, nu=2.0)
    assert noise_pdf(0.0, sh) == 0.0
    assert noise_pdf(0.8, sh) == pytest.approx(math.exp(-0.5) / 0.8, rel=1e-12)


@pytest.mark.parametrize("delta", [0.05, 0.8, 3.0, 40.0])
def test_noise_pdf_integrates_to_one(delta):
    sh = DerivedShape(delta=delta, beta_rate=1.0, nu=2.0)
    total, _ = quad(lambda y: float(noise_pdf(y, sh)), 0.0, 20 * delta, epsabs=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_speech_pdf_points():
    assert speech_pdf(0.0, DerivedShape(1.0, 1.0, 1.0)) == pytest.approx(1.0)
    assert speech_pdf(1.0, DerivedShape(1.0, 1.0, 2.0)) == pytest.approx(math.exp(-1), rel=1e-12)


@pytest.mark.parametrize("nu,beta", [(0.6, 2.0), (1.0, 1.0), (4.0, 2.0), (30.0, 5.0)])
def test_speech_pdf_integrates_to_one(nu, beta):
    sh = DerivedShape(1.0, beta, nu)
    mean, sd = nu / beta, math.sqrt(nu) / beta
    total, _ = quad(lambda y: float(speech_pdf(y, sh)), 0.0, mean + 20 * sd,
                    epsabs=1e-12, limit=400, points=[mean])
    assert total == pytest.approx(1.0, abs=1e-6)


def test_posterior_zero_prior():
    p = params(w1=0.0)
    assert np.all(spp_posterior(np.linspace(0.01, 50, 20), p) == 0.0)


def test_posterior_equal_likelihoods():
    p = params()
    sh = derive_shape(p)
    y_eq = brentq(lambda y: math.log(noise_pdf(y, sh)) - math.log(speech_pdf(y, sh)), 0.6, 3.0)
    assert spp_posterior(y_eq, p) == pytest.approx(0.5, abs=1e-9)


def _mp_posterior(y, p):
    mpmath.mp.dps = 50
    y = mpmath.mpf(y)
    delta = mpmath.mpf(p.mu0) * mpmath.sqrt(2 / mpmath.pi)
    beta = mpmath.mpf(p.mu1) / mpmath.mpf(p.sigma1) ** 2
    nu = mpmath.mpf(p.mu1) ** 2 / mpmath.mpf(p.sigma1) ** 2
    f0 = y / delta**2 * mpmath.exp(-y**2 / (2 * delta**2))
    f1 = beta**nu / mpmath.gamma(nu) * y ** (nu - 1) * mpmath.exp(-beta * y)
    return float(f1 * p.w1 / (f0 * p.w0 + f1 * p.w1))


@pytest.mark.parametrize("y", [0.05, 0.5, 1.0, 3.0, 7.0])
def test_posterior_matches_arbitrary_precision(y):
    p = params()
    assert spp_posterior(y, p) == pytest.approx(_mp_posterior(y, p), rel=1e-12, abs=1e-300)


def test_posterior_both_likelihoods_zero_returns_prior():
    # at y = 0 the Rayleigh density and a nu > 1 Gamma density both vanish
    p = params(w1=0.3, mu1=2.0, sigma1=1.0)
    assert spp_posterior(0.0, p) == 0.3


valid_params = st.builds(
    lambda w1, mu0, s0, mu1, s1: BinMixtureParams(1 - w1, w1, mu0, mu1, s0, s1),
    st.floats(0.0, 1.0), st.floats(1e-3, 50), st.floats(1e-3, 50),
    st.floats(1e-3, 50), st.floats(1e-3, 50))


@settings(max_examples=200, deadline=None)
@given(valid_params, st.floats(0.0, 1e4))
def test_posterior_in_unit_interval(p, y):
    v = spp_posterior(y, p)
    assert 0.0 <= v <= 1.0


@settings(max_examples=100, deadline=None)
@given(valid_params)
def test_pdfs_finite_nonnegative(p):
    sh = derive_shape(p)
    scale = max(p.mu0, p.mu1)
    ys = np.linspace(1e-9, 1e3 * scale, 500)
    for f in (noise_pdf(ys, sh), speech_pdf(ys, sh)):
        assert np.all(np.isfinite(f)) and np.all(f >= 0.0)


@pytest.mark.parametrize("mu0,mu1,sigma1", [(0.5, 3.0, 1.0), (1.0, 5.0, 1.5), (0.2, 1.0, 0.5)])
def test_posterior_monotone_where_ratio_increases(mu0, mu1, sigma1):
    p = params(mu0=mu0, mu1=mu1, sigma1=sigma1)
    sh = derive_shape(p)
    ys = np.linspace(0.01, 3 * mu1, 2000)
    log_ratio = np.log(speech_pdf(ys, sh)) - np.log(noise_pdf(ys, sh))
    increasing = np.diff(log_ratio) > 0
    post = spp_posterior(ys, p)
    dp = np.diff(post)
    assert np.all(dp[increasing] >= -1e-12)
