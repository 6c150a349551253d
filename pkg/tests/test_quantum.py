import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nopa.errors import DomainError, ModelError, ThresholdError
from nopa.quantum import (
    ANTICORRELATED,
    CORRELATED,
    DetectionChain,
    PumpConfig,
    QuadratureVariances,
    correlation_variance,
    entanglement_report,
    fit_chi,
    from_dB,
    gain_to_pump_ratio,
    infer_pump_loss,
    parametric_gain,
    pump_buildup,
    threshold_power,
    to_dB,
    variance_spectrum,
)

KAPPA = 2 * np.pi * 24.7e6
# hand evaluation of the variance formula at P/P_thr = 0.5, f = 0, eta = 1
CORR_HALF = 0.05887450304571851
ANTI_HALF = 67.94112549695431
CHI_DEFAULT = 0.06610356319190872  # (0.253)(0.128)/sqrt(8 * 0.2 * 0.15)
L0_FROM_12_5 = 0.05298221281347032


def test_zero_pump_is_shot_noise():
    assert correlation_variance(0.0, 0.15, 1e6, KAPPA) == 2.0
    assert correlation_variance(0.0, 0.15, 1e6, KAPPA, branch=ANTICORRELATED) == 2.0


def test_half_threshold_values():
    c = correlation_variance(0.5, 1.0, 0.0, KAPPA)
    a = correlation_variance(0.5, 1.0, 0.0, KAPPA, branch=ANTICORRELATED)
    assert c == pytest.approx(CORR_HALF, rel=1e-12)
    assert a == pytest.approx(ANTI_HALF, rel=1e-12)
    assert c == pytest.approx(0.058874, abs=1e-6)
    assert to_dB(c) == pytest.approx(-15.31, abs=0.01)
    assert to_dB(a) == pytest.approx(15.31, abs=0.01)
    assert c * a == pytest.approx(4.0, abs=1e-9)


def test_half_threshold_with_losses():
    c = correlation_variance(0.5, 1.0, 0.0, KAPPA, 0.95, 0.976)
    assert to_dB(c) == pytest.approx(-10.00, abs=0.01)


def test_threshold_errors():
    with pytest.raises(ThresholdError):
        correlation_variance(1.0, 1.0, 0.0, KAPPA, branch=ANTICORRELATED)
    with pytest.raises(ThresholdError):
        correlation_variance(1.1, 1.0, 0.0, KAPPA)
    # correlated branch stays finite at threshold
    assert correlation_variance(1.0, 1.0, 0.0, KAPPA) == pytest.approx(0.0)
    with pytest.raises(DomainError):
        correlation_variance(0.5, 1.0, -1.0, KAPPA)
    with pytest.raises(DomainError):
        correlation_variance(0.5, 1.0, 0.0, 0.0)


def test_threshold_power_scaling_and_inverse():
    p1 = threshold_power(0.2, 0.053, 0.125, 0.003, 0.05)
    assert threshold_power(0.2, 0.053, 0.125, 0.003, 0.1) == pytest.approx(p1 / 4, rel=1e-14)
    chi = fit_chi(0.150, 0.2, 0.053, 0.125, 0.003)
    assert threshold_power(0.2, 0.053, 0.125, 0.003, chi) == pytest.approx(0.150, rel=1e-14)
    with pytest.raises(ModelError):
        threshold_power(0.2, 0.053, 0.125, 0.003, 0.0)
    with pytest.raises(ModelError):
        threshold_power(0.0, 0.053, 0.125, 0.003, 0.05)


def test_threshold_minimum_at_matched_input():
    h = 1e-6
    t0 = 0.053
    slope = (threshold_power(t0 + h, 0.053, 0.125, 0.003, 0.05) - threshold_power(t0 - h, 0.053, 0.125, 0.003, 0.05)) / (2 * h)
    assert abs(slope) < 1e-6


def test_fit_chi_value():
    chi = fit_chi(0.150, 0.20, 0.053, 0.125, 0.003)
    assert chi == pytest.approx(CHI_DEFAULT, rel=1e-12)
    assert fit_chi(0.6, 0.2, 0.053, 0.125, 0.003) == pytest.approx(chi / 2, rel=1e-14)
    with pytest.raises(DomainError):
        fit_chi(0.0, 0.2, 0.053, 0.125, 0.003)


def test_pump_buildup():
    b = pump_buildup(0.2, 0.053)
    assert b == pytest.approx(12.5, abs=0.01)
    assert 0.150 * b == pytest.approx(1.875, abs=0.002)
    assert pump_buildup(0.2, 0.2) == pytest.approx(1 / 0.2)
    ls = np.linspace(0.0, 0.5, 50)
    assert np.all(np.diff([pump_buildup(0.2, l) for l in ls]) < 0)


def test_infer_pump_loss():
    assert infer_pump_loss(12.5, 0.2) == pytest.approx(L0_FROM_12_5, rel=1e-12)
    assert infer_pump_loss(1 / 0.2, 0.2) == pytest.approx(0.2, rel=1e-12)
    with pytest.raises(ModelError, match="30"):
        infer_pump_loss(30.0, 0.2)
    with pytest.raises(DomainError):
        infer_pump_loss(0.5, 0.2)


def test_parametric_gain():
    assert parametric_gain(0.0, 1.0) == 1.0
    assert parametric_gain(0.5, 1.0) == pytest.approx(11.66, abs=0.005)
    assert parametric_gain(0.5, 1.0, "deamplify") == pytest.approx(0.343, abs=5e-4)
    with pytest.raises(ThresholdError):
        parametric_gain(1.0, 1.0)
    with pytest.raises(DomainError):
        parametric_gain(0.5, 1.0, "sideways")


def test_gain_thirty_pump_ratio():
    x = gain_to_pump_ratio(30.0)
    assert x == pytest.approx(0.66818, abs=1e-5)
    assert parametric_gain(x, 1.0) == pytest.approx(30.0, rel=1e-12)


def test_entanglement_report_examples():
    v = float(from_dB(-8.4))
    assert v == pytest.approx(0.28909, abs=1e-5)
    rep = entanglement_report(QuadratureVariances(v, 200.0, 200.0, v))
    assert rep.duan_value == pytest.approx(0.57818, abs=1e-5)
    assert rep.entangled
    assert rep.correlation_dB == pytest.approx(8.4, abs=1e-12)
    assert rep.anti_correlation_dB == pytest.approx(20.0, abs=1e-12)
    snl = entanglement_report(QuadratureVariances(2.0, 2.0, 2.0, 2.0))
    assert snl.correlation_dB == 0.0 and snl.duan_value == 4.0 and not snl.entangled
    with pytest.raises(DomainError):
        entanglement_report(QuadratureVariances(0.0, 2.0, 2.0, 2.0))


def test_spectrum_matches_scalar_calls():
    pump, det = PumpConfig(0.075, 0.15), DetectionChain(0.95, 0.976)
    f = np.linspace(1e5, 5e7, 7)
    spec = variance_spectrum(pump, KAPPA, det, f)
    for i, fi in enumerate(f):
        assert spec.x_sum[i] == correlation_variance(0.075, 0.15, fi, KAPPA, 0.95, 0.976)
        assert spec.x_diff[i] == correlation_variance(0.075, 0.15, fi, KAPPA, 0.95, 0.976, ANTICORRELATED)
    one = variance_spectrum(pump, KAPPA, det, [2e6])
    assert one.x_sum[0] == correlation_variance(0.075, 0.15, 2e6, KAPPA, 0.95, 0.976)
    assert np.all(np.diff(spec.x_sum) > 0) and np.all(np.diff(spec.x_diff) < 0)
    far = variance_spectrum(pump, KAPPA, det, [1e13])
    assert far.at(0).x_sum == pytest.approx(2.0, abs=1e-6)
    assert far.at(0).y_sum == pytest.approx(2.0, abs=1e-6)
    with pytest.raises(DomainError):
        variance_spectrum(pump, KAPPA, det, [2e6, 1e6])


def test_config_types_validate():
    with pytest.raises(ThresholdError):
        PumpConfig(0.2, 0.15)
    with pytest.raises(DomainError):
        DetectionChain(0.0, 0.9)
    assert DetectionChain(0.95, 0.976).total == pytest.approx(0.9272)


ratios = st.floats(0.0, 0.999)
etas = st.floats(0.01, 1.0)
freqs = st.floats(0.0, 1e9)


@settings(max_examples=300, deadline=None)
@given(x=ratios)
def test_minimum_uncertainty_ideal(x):
    c = correlation_variance(x, 1.0, 0.0, KAPPA)
    a = correlation_variance(x, 1.0, 0.0, KAPPA, branch=ANTICORRELATED)
    assert c * a == pytest.approx(4.0, rel=1e-9)


@settings(max_examples=300, deadline=None)
@given(x=ratios, f=freqs, e1=etas, e2=etas)
def test_uncertainty_product_bound(x, f, e1, e2):
    c = correlation_variance(x, 1.0, f, KAPPA, e1, e2)
    a = correlation_variance(x, 1.0, f, KAPPA, e1, e2, ANTICORRELATED)
    assert c * a >= 4.0 * (1 - 1e-12)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(0.0, 0.95), f=st.floats(0.0, 1e8), e=etas, de=st.floats(1e-3, 0.5))
def test_monotonicity(x, f, e, de):
    c = correlation_variance(x, 1.0, f, KAPPA, e)
    # more pump (at f = 0) squeezes more
    assert correlation_variance(x + 0.04, 1.0, 0.0, KAPPA, e) <= correlation_variance(x, 1.0, 0.0, KAPPA, e)
    # higher frequency squeezes less
    assert correlation_variance(x, 1.0, f + 1e6, KAPPA, e) >= c
    # lower efficiency squeezes less
    assert correlation_variance(x, 1.0, f, KAPPA, e * (1 - de)) >= c


@settings(max_examples=200, deadline=None)
@given(x=ratios, f=freqs, e1=etas, e2=etas)
def test_x_y_symmetry(x, f, e1, e2):
    spec = variance_spectrum(PumpConfig(x, 1.0), KAPPA, DetectionChain(e1, e2), [max(f, 1.0)])
    assert spec.x_sum[0] == spec.y_diff[0]
    assert spec.x_diff[0] == spec.y_sum[0]


@settings(max_examples=200, deadline=None)
@given(r=st.floats(1.01, 19.0), t0=st.floats(0.05, 0.5))
def test_buildup_round_trip(r, t0):
    try:
        l0 = infer_pump_loss(r, t0)
    except ModelError:
        assert 2 * np.sqrt(t0 / r) < t0
        return
    if l0 < 1.0:
        assert pump_buildup(t0, l0) == pytest.approx(r, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(p=st.floats(1e-3, 10.0))
def test_fit_chi_round_trip(p):
    chi = fit_chi(p, 0.2, 0.053, 0.125, 0.003)
    assert threshold_power(0.2, 0.053, 0.125, 0.003, chi) == pytest.approx(p, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(0.0, 0.99))
def test_gain_product_identity(x):
    assert parametric_gain(x, 1.0) * parametric_gain(x, 1.0, "deamplify") == pytest.approx((1 - x) ** -2, rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(x=ratios, f=freqs, e=etas, s=st.floats(0.1, 1.0))
def test_report_ordering_invariant_under_efficiency_rescaling(x, f, e, s):
    def report(eta):
        c = correlation_variance(x, 1.0, f, KAPPA, eta)
        a = correlation_variance(x, 1.0, f, KAPPA, eta, branch=ANTICORRELATED)
        v = QuadratureVariances.from_branches(c, a)
        return np.argsort([v.x_sum, v.x_diff]), np.argsort([v.y_sum, v.y_diff])

    a1, b1 = report(e)
    a2, b2 = report(e * s)
    if x > 0:
        assert list(a1) == list(a2) and list(b1) == list(b2)
