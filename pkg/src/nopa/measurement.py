"""Seeded simulations of cavity-length scans and spectrum-analyzer noise traces."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cavity import airy_lineshape, airy_floor, round_trip_survival
from .errors import DomainError, ResonanceSearchError
from .quantum import QuadratureVariances, parametric_gain
from .resonance import _modes, fractional_detunings

WAVEFORM_SHAPES = ("triangle", "sawtooth")


# -- cavity scan -------------------------------------------------------------

@dataclass(frozen=True)
class ScanWaveform:
    shape: str = "triangle"
    amplitude: float = 1.2 * 540e-9  # peak-to-peak trim sweep, m
    period: float = 0.02  # s
    samples: int = 4000

    def __post_init__(self):
        if self.shape not in WAVEFORM_SHAPES:
            raise DomainError(f"waveform shape {self.shape!r} not in {WAVEFORM_SHAPES}")
        if self.amplitude <= 0 or self.period <= 0:
            raise DomainError("amplitude and period must be positive")
        if self.samples < 4:
            raise DomainError("need at least 4 samples")

    def profile(self):
        """(time, u) with u in [0, 1] the normalized drive position.

        For sample counts divisible by 4 the sweep center u = 0.5 is hit
        exactly.
        """
        t = np.arange(self.samples) * (self.period / self.samples)
        phase = np.arange(self.samples) / self.samples
        if self.shape == "triangle":
            u = 1.0 - np.abs(2.0 * phase - 1.0)
        else:
            u = phase
        return t, u


@dataclass(frozen=True)
class ScanTrace:
    time: np.ndarray
    trim: np.ndarray
    pump_transmission: np.ndarray
    subharmonic_transmission: np.ndarray
    signal_transmission: np.ndarray
    idler_transmission: np.ndarray
    gain: np.ndarray

    def peak(self):
        return float(np.max(self.subharmonic_transmission))


def _mode_survival(geom, mode):
    t_total, loss, _ = geom.coupling(mode)
    return round_trip_survival(t_total, loss)


def simulate_cavity_scan(geom, model, temperature, d, pump_config, waveform, seed,
                         center_trim=0.0, noise_std=0.0, modes=None):
    """Transmission of pump and summed subharmonics while the cavity length is swept.

    Each mode follows its Airy lineshape normalized to 1 on resonance. The
    subharmonic is scaled by the amplifying parametric gain evaluated at
    P * l, where l is the pump circulating power normalized between its
    anti-resonant floor (0) and resonance (1). Gaussian detector noise of
    standard deviation ``noise_std`` is added to both traces.
    """
    modes = _modes(modes)
    rng = np.random.default_rng(seed)
    wf_amp_fsr = 2.0 * waveform.amplitude / modes[0].vacuum_wavelength
    if wf_amp_fsr < 1.0:
        raise DomainError(f"scan covers {wf_amp_fsr:.3g} subharmonic FSR; need at least 1")
    t, u = waveform.profile()
    trim = center_trim + waveform.amplitude * (u - 0.5)

    r0 = fractional_detunings(geom, model, temperature, d, center_trim, modes)
    shapes = []
    for j, mode in enumerate(modes):
        cycles = r0[j] + (trim - center_trim) * 2.0 / mode.vacuum_wavelength
        shapes.append(airy_lineshape(2.0 * np.pi * cycles, _mode_survival(geom, mode)))
    sig, idl, pump = shapes

    floor = airy_floor(_mode_survival(geom, modes[2]))
    pump_fraction = np.clip((pump - floor) / (1.0 - floor), 0.0, 1.0)
    gain = np.array([parametric_gain(pump_config.pump_power * lf, pump_config.threshold) for lf in pump_fraction])
    sig, idl = sig * gain, idl * gain
    sub = sig + idl
    if noise_std > 0:
        pump = pump + rng.normal(0.0, noise_std, pump.shape)
        sub = sub + rng.normal(0.0, noise_std, sub.shape)
    return ScanTrace(t, trim, pump, sub, sig, idl, gain)


STAGE_TARGETS = {
    "single": (0.0, -0.5, -0.5),
    "double": (0.0, 0.0, -0.5),
    "triple": (0.0, 0.0, 0.0),
}


def stage_operating_point(geom, model, stage, triple=None, domain=None, modes=None, max_order=3):
    """(T, d, trim) for a scan stage, offset from a triple-resonance solution.

    single: idler half an FSR from the signal, pump anti-resonant at both
    subharmonic peaks. double: signal and idler coincide, pump anti-resonant.
    triple: all three resonant. Detuning targets are only defined modulo
    whole cycles, so the equivalent targets within ``max_order`` cycles are
    tried and the in-aperture point closest in temperature to the triple
    point is kept.
    """
    from .resonance import _PhaseEvaluator, solve_operating_point, solve_triple_resonance

    if stage not in STAGE_TARGETS:
        raise DomainError(f"unknown stage {stage!r}")
    modes = _modes(modes)
    if triple is None:
        triple = solve_triple_resonance(geom, model, domain, modes)
    x0 = np.array([triple.temperature, triple.wedge_offset, triple.length_trim])
    if stage == "triple":
        return tuple(float(v) for v in x0)
    targets = np.array(STAGE_TARGETS[stage])
    jac = _PhaseEvaluator(geom, model, modes).jacobian(*x0)
    width = geom.crystal.aperture[0]
    candidates = []
    for j in range(-max_order, max_order + 1):
        for k in range(-max_order, max_order + 1):
            guess = x0 + np.linalg.solve(jac, targets + np.array([0.0, j, k]))
            if 0.0 <= guess[1] <= width:
                candidates.append((abs(guess[0] - x0[0]), abs(guess[1] - x0[1]), tuple(guess)))
    for _, _, guess in sorted(candidates):
        x = solve_operating_point(geom, model, guess, targets, modes)
        if 0.0 <= x[1] <= width:
            return tuple(float(v) for v in x)
    raise ResonanceSearchError(f"no {stage} operating point inside the aperture near the triple resonance")


# -- spectrum-analyzer noise -------------------------------------------------

@dataclass(frozen=True)
class NoiseTraceConfig:
    set_level_dB: float = 0.0
    rbw: float = 10e3
    vbw: float = 100.0
    duration: float = 1.0
    sample_rate: float = 1000.0
    enl_dB: float = -15.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.rbw <= 0 or self.vbw <= 0:
            raise DomainError("rbw and vbw must be positive")
        if not self.vbw < self.rbw:
            raise DomainError(f"vbw {self.vbw} must be below rbw {self.rbw}")
        if self.points < 100:
            raise DomainError(f"duration * sample_rate = {self.points} points; need >= 100")

    @property
    def points(self):
        return int(round(self.duration * self.sample_rate))

    @property
    def averages(self):
        return max(1, int(round(self.rbw / self.vbw)))


@dataclass(frozen=True)
class NoiseTrace:
    time: np.ndarray
    power_dB: np.ndarray
    snl_dB: np.ndarray
    enl_dB: np.ndarray
    set_level_dB: float
    averages: int


def _averaged_power_dB(rng, level_dB, n_avg, size):
    # mean of n_avg unit exponentials is Gamma(n_avg, 1/n_avg)
    return level_dB + 10.0 * np.log10(rng.gamma(n_avg, 1.0 / n_avg, size))


def simulate_level_traces(config, levels_dB):
    """SNL, one trace per entry of ``levels_dB`` (in order), then ENL, from one seeded stream.

    Returns (time, snl, traces, enl) with ``traces`` a list of arrays.
    """
    rng = np.random.default_rng(config.rng_seed)
    n, m = config.points, config.averages
    t = np.arange(n) / config.sample_rate
    snl = _averaged_power_dB(rng, 0.0, m, n)
    traces = [_averaged_power_dB(rng, float(level), m, n) for level in levels_dB]
    enl = _averaged_power_dB(rng, config.enl_dB, m, n)
    return t, snl, traces, enl


def simulate_noise_trace(config):
    """Video-averaged square-law detector output at the set level, with SNL and ENL."""
    t, snl, (trace,), enl = simulate_level_traces(config, [config.set_level_dB])
    return NoiseTrace(t, trace, snl, enl, float(config.set_level_dB), config.averages)


def log_average_scatter_dB(n_avg):
    """Exact standard deviation in dB of 10 log10(mean of n_avg exponentials)."""
    trigamma = math.pi**2 / 6.0 - sum(1.0 / k**2 for k in range(1, n_avg))
    return 10.0 / math.log(10.0) * math.sqrt(trigamma)


def log_average_bias_dB(n_avg):
    """Mean offset of 10 log10(mean of n_avg exponentials) from the true level."""
    digamma = -0.5772156649015329 + sum(1.0 / k for k in range(1, n_avg))
    return 10.0 / math.log(10.0) * (digamma - math.log(n_avg))


@dataclass(frozen=True)
class LevelEstimate:
    level_dB: float
    sem_dB: float
    std_dB: float  # per-point scatter of the trace itself
    points: int

    def as_dict(self):
        return {"level_dB": self.level_dB, "sem_dB": self.sem_dB, "std_dB": self.std_dB, "points": self.points}


def estimate_dB_from_trace(trace, snl_trace):
    """Mean level of ``trace`` relative to ``snl_trace`` (both in dB).

    The log-averaging bias is common to both traces and cancels.
    """
    a = np.asarray(trace, dtype=float)
    b = np.asarray(snl_trace, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"trace length {a.shape} differs from SNL length {b.shape}")
    if a.size < 2:
        raise DomainError("need at least two points")
    n = a.size
    diff = a - b
    return LevelEstimate(
        level_dB=float(np.mean(diff)),
        sem_dB=float(np.std(diff, ddof=1) / np.sqrt(n)),
        std_dB=float(np.std(a, ddof=1)),
        points=n,
    )


# -- phase jitter ------------------------------------------------------------

def _mix(c, a, sigma):
    cs, sn = np.cos(sigma) ** 2, np.sin(sigma) ** 2
    return c * cs + a * sn, a * cs + c * sn


def apply_phase_jitter(variances, sigma):
    """Mix correlated and anticorrelated combinations for RMS locking error ``sigma`` (rad)."""
    if not (0.0 <= sigma <= np.pi / 4 + 1e-15):
        raise DomainError(f"sigma = {sigma} outside [0, pi/4]")
    x_sum, x_diff = _mix(variances.x_sum, variances.x_diff, sigma)
    y_diff, y_sum = _mix(variances.y_diff, variances.y_sum, sigma)
    return QuadratureVariances(float(x_sum), float(x_diff), float(y_sum), float(y_diff))


def calibrate_phase_jitter(correlated, anticorrelated, target):
    """Jitter that raises ``correlated`` to ``target`` (variances, SNL = 2)."""
    if not correlated <= target <= 0.5 * (correlated + anticorrelated):
        raise DomainError(
            f"target variance {target} not reachable from {correlated} with sigma in [0, pi/4]"
        )
    s2 = (target - correlated) / (anticorrelated - correlated) if anticorrelated != correlated else 0.0
    return float(np.arcsin(np.sqrt(s2)))
