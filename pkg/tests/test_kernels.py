import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hawkesnet.errors import SupercriticalModel
from hawkesnet.kernels import (
    Exponential,
    Indicator,
    ModelParams,
    Zero,
    check_subcritical,
    kernel_eval,
    kernel_stats,
)


def test_exponential_closed_forms_match_quadrature():
    k = Exponential(beta=2.0, alpha=1.5)
    assert k.mass == pytest.approx(integrate.quad(k, 0, np.inf)[0], rel=1e-10)
    assert k.moment(3) == pytest.approx(integrate.quad(lambda s: s**3 * k(s), 0, np.inf)[0], rel=1e-10)
    assert k.l2_sq == pytest.approx(integrate.quad(lambda s: k(s) ** 2, 0, np.inf)[0], rel=1e-10)


def test_indicator_closed_forms_match_quadrature():
    k = Indicator(width=2.5, height=0.3)
    pts = [k.width]
    assert k.mass == pytest.approx(integrate.quad(k, 0, 10, points=pts)[0], rel=1e-10)
    assert k.moment(7) == pytest.approx(integrate.quad(lambda s: s**7 * k(s), 0, 10, points=pts)[0], rel=1e-9)
    assert k.l2_sq == pytest.approx(integrate.quad(lambda s: k(s) ** 2, 0, 10, points=pts)[0], rel=1e-10)


def test_indicator_includes_right_endpoint():
    k = Indicator(width=1.0, height=2.0)
    assert k(1.0) == 2.0
    assert k(1.0 + 1e-12) == 0.0


def test_zero_kernel():
    z = Zero()
    assert z.mass == 0.0 and z.l2_sq == 0.0 and z(3.0) == 0.0
    assert kernel_stats(z, 7).Lambda == 0.0


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        kernel_eval(Exponential(1.0, 1.0), -0.1)


def test_kernel_stats_requires_q_at_least_one():
    with pytest.raises(ValueError):
        kernel_stats(Exponential(1.0, 1.0), 0)


def test_from_mass():
    assert Exponential.from_mass(0.5, beta=3.0).mass == pytest.approx(0.5)
    assert Indicator.from_mass(0.4, width=2.0).mass == pytest.approx(0.4)


@pytest.mark.parametrize("k", [Exponential(1.3, 0.7), Indicator(0.8, 1.1)])
def test_cumulative_is_integral(k):
    for t in (0.1, 0.5, 2.0, 7.0):
        ref = integrate.quad(k, 0, t, points=[x for x in [k.support] if x < t] or None)[0]
        assert k.cumulative(t) == pytest.approx(ref, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("k", [Exponential(2.0, 1.0), Indicator(1.5, 1.0)])
def test_sample_delays_mean(k):
    rng = np.random.default_rng(3)
    d = k.sample_delays(rng, 200_000)
    mean = k.moment(1) / k.mass
    assert d.min() >= 0
    assert abs(d.mean() - mean) < 4 * d.std() / math.sqrt(d.size)


@given(
    beta=st.floats(0.05, 20), alpha=st.floats(0, 10),
    t1=st.floats(0, 50), t2=st.floats(0, 50),
)
def test_exponential_non_increasing(beta, alpha, t1, t2):
    k = Exponential(beta, alpha)
    lo, hi = min(t1, t2), max(t1, t2)
    assert k(hi) <= k(lo)


@given(width=st.floats(0.01, 10), height=st.floats(0, 10), t1=st.floats(0, 50), t2=st.floats(0, 50))
def test_indicator_non_increasing(width, height, t1, t2):
    k = Indicator(width, height)
    lo, hi = min(t1, t2), max(t1, t2)
    assert k(hi) <= k(lo)


def test_check_subcritical_constants():
    c = check_subcritical(ModelParams(1.0, 0.5, Exponential.from_mass(0.5)))
    assert c.branching == pytest.approx(0.25)
    assert c.a == pytest.approx(0.625)
    assert c.c_pLambda == pytest.approx(0.75**2 / 0.5)


def test_supercritical_rejected():
    with pytest.raises(SupercriticalModel):
        check_subcritical(ModelParams(1.0, 0.5, Exponential.from_mass(2.0)))


@pytest.mark.parametrize("mu,p", [(0.0, 0.5), (-1.0, 0.5), (1.0, -0.1), (1.0, 1.1)])
def test_model_params_validation(mu, p):
    with pytest.raises(ValueError):
        ModelParams(mu, p)
