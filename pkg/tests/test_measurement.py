import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nopa.errors import DomainError
from nopa.measurement import (
    NoiseTraceConfig,
    ScanWaveform,
    apply_phase_jitter,
    calibrate_phase_jitter,
    estimate_dB_from_trace,
    log_average_bias_dB,
    log_average_scatter_dB,
    simulate_cavity_scan,
    simulate_level_traces,
    simulate_noise_trace,
    stage_operating_point,
)
from nopa.quantum import PumpConfig, QuadratureVariances, parametric_gain
from nopa.resonance import fractional_detunings

PUMP = PumpConfig(0.075, 0.15)


@pytest.fixture(scope="module")
def stages(geom, model, triple_solutions):
    return {s: stage_operating_point(geom, model, s, triple_solutions[0]) for s in ("single", "double", "triple")}


def _scan(geom, model, x, pump=PUMP, **kw):
    return simulate_cavity_scan(geom, model, x[0], x[1], pump, ScanWaveform(), 7, center_trim=x[2], **kw)


def test_stage_detunings(geom, model, stages):
    r = fractional_detunings(geom, model, *stages["single"])
    assert abs(r.signal) < 1e-8 and abs(abs(r.idler) - 0.5) < 1e-8 and abs(abs(r.pump) - 0.5) < 1e-8
    r = fractional_detunings(geom, model, *stages["double"])
    assert r.signal == pytest.approx(0, abs=1e-8) and r.idler == pytest.approx(0, abs=1e-8)
    assert abs(abs(r.pump) - 0.5) < 1e-8
    for x in stages.values():
        assert 0.0 <= x[1] <= geom.crystal.aperture[0]


def test_single_stage_two_distinct_peaks(geom, model, stages):
    tr = _scan(geom, model, stages["single"])
    k_s = np.argmax(tr.signal_transmission)
    k_i = np.argmax(tr.idler_transmission)
    assert abs(tr.trim[k_s] - tr.trim[k_i]) > 100e-9
    # pump anti-resonant under both peaks: no gain there
    assert tr.gain[k_s] == pytest.approx(1.0, abs=1e-9)
    assert tr.signal_transmission[k_s] == pytest.approx(1.0, abs=1e-12)


def test_double_peak_is_twice_single(geom, model, stages):
    unit = _scan(geom, model, stages["single"]).signal_transmission.max()
    peak = _scan(geom, model, stages["double"]).peak()
    assert peak / unit == pytest.approx(2.0, abs=1e-12)


def test_triple_peak_is_twice_gain(geom, model, stages):
    unit = _scan(geom, model, stages["single"]).signal_transmission.max()
    peak = _scan(geom, model, stages["triple"]).peak()
    assert peak / unit == pytest.approx(2 * parametric_gain(0.075, 0.15), rel=1e-12)


def test_triple_peak_at_thirty_fold_gain(geom, model, stages):
    pump = PumpConfig(0.66818 * 0.15, 0.15)
    peak = _scan(geom, model, stages["triple"], pump=pump).peak()
    assert peak == pytest.approx(2 * 30.0, rel=1e-3)


def test_scan_peaks_sit_on_detuning_zeros(geom, model, stages):
    x = stages["double"]
    tr = _scan(geom, model, x)
    step = np.max(np.abs(np.diff(tr.trim)))
    k = np.argmax(tr.subharmonic_transmission)
    assert abs(fractional_detunings(geom, model, x[0], x[1], tr.trim[k]).signal) * 540e-9 <= step


def test_scan_deterministic_and_noisy(geom, model, stages):
    a = _scan(geom, model, stages["triple"], noise_std=0.01)
    b = _scan(geom, model, stages["triple"], noise_std=0.01)
    clean = _scan(geom, model, stages["triple"])
    assert np.array_equal(a.subharmonic_transmission, b.subharmonic_transmission)
    resid = a.subharmonic_transmission - clean.subharmonic_transmission
    assert np.std(resid) == pytest.approx(0.01, rel=0.1)


def test_waveforms():
    t, u = ScanWaveform("triangle", 1e-6, 1.0, 8).profile()
    assert list(u) == [0.0, 0.25, 0.5, 0.75, 1.0, 0.75, 0.5, 0.25]
    t, u = ScanWaveform("sawtooth", 1e-6, 1.0, 8).profile()
    assert u[4] == 0.5 and np.all(np.diff(u) > 0)
    with pytest.raises(DomainError):
        ScanWaveform("sine")


def test_scan_must_cover_one_fsr(geom, model, stages):
    x = stages["triple"]
    with pytest.raises(DomainError):
        simulate_cavity_scan(geom, model, x[0], x[1], PUMP, ScanWaveform(amplitude=200e-9), 0)


def test_noise_config_validation():
    with pytest.raises(DomainError):
        NoiseTraceConfig(rbw=100.0, vbw=100.0)
    with pytest.raises(DomainError):
        NoiseTraceConfig(duration=0.05, sample_rate=1000.0)
    assert NoiseTraceConfig().averages == 100
    assert NoiseTraceConfig(rbw=50.0, vbw=40.0).averages == 1


def test_log_average_statistics_closed_form():
    assert log_average_scatter_dB(100) == pytest.approx(0.4353824743396317, rel=1e-12)
    assert log_average_scatter_dB(100) == pytest.approx(10 / math.log(10) / 10, rel=0.01)
    assert log_average_bias_dB(100) == pytest.approx(-10 / math.log(10) / 200, rel=0.01)
    assert log_average_scatter_dB(1) == pytest.approx(10 / math.log(10) * math.pi / math.sqrt(6), rel=1e-12)


def test_log_average_statistics_monte_carlo():
    rng = np.random.default_rng(3)
    draws = 10 * np.log10(rng.exponential(1.0, (200000, 100)).mean(axis=1))
    assert np.std(draws) == pytest.approx(log_average_scatter_dB(100), rel=0.01)
    assert np.mean(draws) == pytest.approx(log_average_bias_dB(100), abs=0.003)


def test_noise_trace_scatter_and_level():
    cfg = NoiseTraceConfig(set_level_dB=-8.4, rng_seed=11)
    tr = simulate_noise_trace(cfg)
    est = estimate_dB_from_trace(tr.power_dB, tr.snl_dB)
    assert abs(est.level_dB + 8.4) < 3 * est.sem_dB
    assert abs(est.level_dB + 8.4) < 0.18
    assert est.std_dB == pytest.approx((10 / math.log(10)) / math.sqrt(100), rel=0.2)
    assert np.all(np.isfinite(tr.power_dB))


def test_snl_calibration_large_average():
    tr = simulate_noise_trace(NoiseTraceConfig(rbw=1e6, vbw=1.0, rng_seed=5))
    assert np.mean(tr.snl_dB) == pytest.approx(0.0, abs=0.01)


def test_estimator_bias_cancels():
    rng = np.random.default_rng(8)
    levels = []
    for seed in rng.integers(0, 2**31, 200):
        tr = simulate_noise_trace(NoiseTraceConfig(set_level_dB=-3.0, rng_seed=int(seed)))
        levels.append(estimate_dB_from_trace(tr.power_dB, tr.snl_dB).level_dB)
    assert abs(np.mean(levels) + 3.0) < 0.01


def test_estimator_identity_and_errors():
    tr = simulate_noise_trace(NoiseTraceConfig(rng_seed=2))
    est = estimate_dB_from_trace(tr.snl_dB, tr.snl_dB)
    assert est.level_dB == 0.0 and est.sem_dB == 0.0
    with pytest.raises(DomainError):
        estimate_dB_from_trace(tr.snl_dB[:-1], tr.snl_dB)


def test_noise_deterministic_per_seed():
    a = simulate_noise_trace(NoiseTraceConfig(set_level_dB=-5.0, rng_seed=4))
    b = simulate_noise_trace(NoiseTraceConfig(set_level_dB=-5.0, rng_seed=4))
    c = simulate_noise_trace(NoiseTraceConfig(set_level_dB=-5.0, rng_seed=5))
    assert np.array_equal(a.power_dB, b.power_dB) and np.array_equal(a.enl_dB, b.enl_dB)
    assert not np.array_equal(a.power_dB, c.power_dB)


def test_single_level_matches_multi_level_stream():
    cfg = NoiseTraceConfig(set_level_dB=-2.0, rng_seed=9)
    t, snl, (trace,), enl = simulate_level_traces(cfg, [-2.0])
    tr = simulate_noise_trace(cfg)
    assert np.array_equal(tr.power_dB, trace) and np.array_equal(tr.enl_dB, enl)


def test_scatter_scales_with_averaging():
    vbws = np.geomspace(10.0, 100.0, 6)
    stds = [np.std(simulate_noise_trace(NoiseTraceConfig(rbw=1e4, vbw=v, duration=20.0, rng_seed=1)).power_dB)
            for v in vbws]
    n = np.rint(1e4 / vbws)
    slope = np.polyfit(np.log(n), np.log(stds), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.05)


def test_phase_jitter_examples():
    v = QuadratureVariances.from_branches(0.2, 67.9)
    assert apply_phase_jitter(v, 0.0) == v
    half = apply_phase_jitter(v, np.pi / 4)
    assert half.x_sum == pytest.approx((0.2 + 67.9) / 2) and half.y_diff == pytest.approx((0.2 + 67.9) / 2)
    sigma = calibrate_phase_jitter(0.2, 67.9, 0.2891)
    assert sigma == pytest.approx(0.036, abs=5e-4)
    assert apply_phase_jitter(v, sigma).x_sum == pytest.approx(0.2891, rel=1e-12)
    with pytest.raises(DomainError):
        apply_phase_jitter(v, 1.0)
    with pytest.raises(DomainError):
        calibrate_phase_jitter(0.2, 67.9, 0.1)


@settings(max_examples=200, deadline=None)
@given(c=st.floats(0.01, 2.0), a=st.floats(2.0, 1000.0), sigma=st.floats(0.0, np.pi / 4))
def test_jitter_never_improves_correlation(c, a, sigma):
    v = apply_phase_jitter(QuadratureVariances.from_branches(c, a), sigma)
    assert v.x_sum >= c * (1 - 1e-12) and v.y_diff >= c * (1 - 1e-12)
    assert v.x_diff <= a * (1 + 1e-12)
