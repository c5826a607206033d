import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from arpdp.dp_core import (
    PrivacyParamError,
    PrivacyParams,
    delta_from_prime,
    eps_from_rho_delta,
    gaussian_budget,
    laplace_budget,
    rho_from_eps_delta,
    sample_gaussian,
    sample_laplace,
    threshold_round,
)

# Frozen with mpmath at 40 digits: (sqrt(ln(1/d) + e) - sqrt(ln(1/d)))**2
RHO_EPS1_D001 = 0.04908796336007092849
RHO_EPS1_EDGE95 = 0.01759507031536715073  # delta = 0.01 / 95**2
RHO_EPS1_NODE95 = 0.02589983238717944204  # delta = 0.01 / 95
STD_EPS1_EDGE95_T30 = 29.19779978177499379  # sqrt(30 / (2 rho))


def rng(seed=0):
    return np.random.default_rng(seed)


# --- samplers -----------------------------------------------------------------


def test_laplace_std_at_naive_scale():
    scale = 30 / 5
    x = sample_laplace(scale, rng(1), size=1_000_000)
    assert x.std() == pytest.approx(scale * math.sqrt(2), rel=5e-3)


def test_laplace_reproducible():
    a = sample_laplace(1.0, rng(42))
    b = sample_laplace(1.0, rng(42))
    assert isinstance(a, float) and a == b


def test_laplace_mean_near_zero():
    x = sample_laplace(2.0, rng(2), size=1_000_000)
    # 5 sigma of the sample mean is 5 * 2*sqrt(2)/1000 = 0.014
    assert abs(x.mean()) < 0.02


def test_gaussian_std_from_rho():
    std = math.sqrt(30 / (2 * 0.6))
    assert std == pytest.approx(5.0)
    x = sample_gaussian(std, rng(3), size=200_000)
    assert x.std() == pytest.approx(5.0, rel=1e-2)


def test_gaussian_reproducible():
    assert sample_gaussian(2.0, rng(7)) == sample_gaussian(2.0, rng(7))


def test_gaussian_variance():
    x = sample_gaussian(3.0, rng(4), size=1_000_000)
    assert x.var() == pytest.approx(9.0, rel=0.01)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("inf"), float("nan")])
def test_samplers_reject_bad_scale(bad):
    with pytest.raises(PrivacyParamError):
        sample_laplace(bad, rng())
    with pytest.raises(PrivacyParamError):
        sample_gaussian(bad, rng())


def test_samplers_require_generator():
    with pytest.raises(TypeError):
        sample_laplace(1.0, np.random.RandomState(0))


@pytest.mark.parametrize("scale", [0.5, 3.0])
def test_laplace_ks(scale):
    x = sample_laplace(scale, rng(11), size=100_000)
    assert stats.kstest(x, stats.laplace(scale=scale).cdf).pvalue > 0.01


@pytest.mark.parametrize("std", [0.5, 3.0])
def test_gaussian_ks(std):
    x = sample_gaussian(std, rng(12), size=100_000)
    assert stats.kstest(x, stats.norm(scale=std).cdf).pvalue > 0.01


# --- accounting -----------------------------------------------------------------


def test_rho_known_value():
    assert rho_from_eps_delta(1.0, 0.01) == pytest.approx(RHO_EPS1_D001, rel=1e-12)
    assert rho_from_eps_delta(1.0, 0.01) == pytest.approx(0.0491, abs=1e-4)


def test_eps_from_rho_known_value():
    assert eps_from_rho_delta(0.0491, 0.01) == pytest.approx(1.0, abs=2e-4)
    assert eps_from_rho_delta(RHO_EPS1_D001, 0.01) == pytest.approx(1.0, rel=1e-12)


def test_rho_vanishes_with_epsilon():
    assert rho_from_eps_delta(1e-12, 0.3) < 1e-20


def test_eps_zero_at_rho_zero():
    assert eps_from_rho_delta(0.0, 0.5) == 0.0


def test_round_trip_tiny_delta():
    d = 0.01 / 95**2
    assert eps_from_rho_delta(rho_from_eps_delta(2.0, d), d) == pytest.approx(2.0, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-6, 50.0), st.floats(1e-15, 0.999))
def test_round_trip_property(eps, delta):
    assert eps_from_rho_delta(rho_from_eps_delta(eps, delta), delta) == pytest.approx(eps, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 20.0), st.floats(1e-3, 20.0), st.floats(1e-12, 0.5))
def test_rho_increasing_in_epsilon(e1, e2, delta):
    if e1 == e2:
        return
    lo, hi = sorted((e1, e2))
    assert rho_from_eps_delta(lo, delta) < rho_from_eps_delta(hi, delta)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-2, 20.0), st.floats(1e-12, 0.9), st.floats(1e-12, 0.9))
def test_rho_increasing_in_delta(eps, d1, d2):
    if abs(math.log(d1) - math.log(d2)) < 1e-6:
        return
    lo, hi = sorted((d1, d2))
    assert rho_from_eps_delta(eps, lo) < rho_from_eps_delta(eps, hi)


@pytest.mark.parametrize("eps,delta", [(0.0, 0.1), (-1.0, 0.1), (1.0, 0.0), (1.0, 1.0)])
def test_rho_domain(eps, delta):
    with pytest.raises(PrivacyParamError):
        rho_from_eps_delta(eps, delta)


def test_delta_from_prime():
    assert delta_from_prime(0.01, "node", 95) == pytest.approx(0.01 / 95)
    assert delta_from_prime(0.01, "edge", 95) == pytest.approx(0.01 / 9025)
    assert delta_from_prime(0.3, "node", 1) == 0.3
    with pytest.raises(PrivacyParamError):
        delta_from_prime(0.01, "vertex", 3)


def test_budgets():
    p = PrivacyParams(epsilon=5, t=30, notion="edge", n=95)
    assert laplace_budget(p).per_interval_scale == 6.0
    g = gaussian_budget(PrivacyParams(epsilon=1, t=30, notion="edge", n=95, delta_prime=0.01))
    assert g.rho == pytest.approx(RHO_EPS1_EDGE95, rel=1e-12)
    assert g.per_interval_scale == pytest.approx(STD_EPS1_EDGE95_T30, rel=1e-12)
    g_node = gaussian_budget(PrivacyParams(epsilon=1, t=30, notion="node", n=95, delta_prime=0.01))
    assert g_node.rho == pytest.approx(RHO_EPS1_NODE95, rel=1e-12)
    # Gaussian noise grows like sqrt(t); Laplace like t.
    g4 = gaussian_budget(PrivacyParams(epsilon=1, t=120, notion="edge", n=95, delta_prime=0.01))
    assert g4.per_interval_scale / g.per_interval_scale == pytest.approx(2.0)
    assert laplace_budget(PrivacyParams(1, 120, "edge", 95)).per_interval_scale == 4 * laplace_budget(
        PrivacyParams(1, 30, "edge", 95)).per_interval_scale


@pytest.mark.parametrize("kw", [dict(epsilon=0), dict(t=0), dict(n=0), dict(notion="x"), dict(delta_prime=1.0)])
def test_privacy_params_validation(kw):
    base = dict(epsilon=1.0, t=1, notion="edge", n=1, delta_prime=0.1)
    base.update(kw)
    with pytest.raises(PrivacyParamError):
        PrivacyParams(**base)


def test_gaussian_budget_needs_delta_prime():
    with pytest.raises(PrivacyParamError):
        gaussian_budget(PrivacyParams(1.0, 1, "edge", 3))


# --- post-processing --------------------------------------------------------------


@pytest.mark.parametrize("x,y", [(-3.7, 0), (0.0, 0), (0.49, 0), (0.5, 1), (4.5, 5), (12.3, 12), (12.7, 13)])
def test_threshold_round(x, y):
    out = threshold_round(x)
    assert out == y and isinstance(out, int)


def test_threshold_round_vectorised():
    assert threshold_round([-1.0, 2.5, 3.49]).tolist() == [0, 3, 3]


@settings(max_examples=300, deadline=None)
@given(st.floats(-1e9, 1e9), st.floats(-1e9, 1e9))
def test_threshold_round_idempotent_and_monotone(a, b):
    assert threshold_round(threshold_round(a)) == threshold_round(a)
    lo, hi = sorted((a, b))
    assert threshold_round(lo) <= threshold_round(hi)
    assert threshold_round(a) >= 0


def laplace_pdf(x, b):
    return np.exp(-np.abs(x) / b) / (2 * b)


@pytest.mark.parametrize("eps0", [0.1, 1.0, 3.0])
@pytest.mark.parametrize("sens", [1.0, 2.0])
def test_laplace_density_ratio_bounded(eps0, sens):
    x = np.linspace(-50, 50, 20001)
    b = sens / eps0
    for a, c in [(0.0, sens), (3.0, 3.0 - sens), (0.0, sens / 2)]:
        ratio = laplace_pdf(x - a, b) / laplace_pdf(x - c, b)
        assert ratio.max() <= math.exp(eps0) * (1 + 1e-12)
