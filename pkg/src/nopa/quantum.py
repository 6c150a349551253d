"""Below-threshold NOPA: threshold, quadrature correlation spectra, gain.

Variances are normalized so that the shot-noise limit of each two-mode
combination (sum or difference of the signal and idler quadratures) is 2.
On deamplification the amplitude sum and phase difference are the
correlated (squeezed) combinations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModelError, ThresholdError

SNL = 2.0

CORRELATED = "correlated"
ANTICORRELATED = "anticorrelated"


@dataclass(frozen=True)
class PumpConfig:
    pump_power: float  # W
    threshold: float  # W
    chi: float | None = None  # W^-1/2
    pump_resonant: bool = True

    def __post_init__(self):
        if self.pump_power < 0 or self.threshold <= 0:
            raise DomainError("pump power must be >= 0 and threshold > 0")
        if self.pump_power >= self.threshold:
            raise ThresholdError(f"pump power {self.pump_power} W at or above threshold {self.threshold} W")
        if self.chi is not None and self.chi <= 0:
            raise DomainError("nonlinear coefficient chi must be positive")

    @property
    def ratio(self):
        return self.pump_power / self.threshold


@dataclass(frozen=True)
class DetectionChain:
    eta_det: float
    eta_esc: float

    def __post_init__(self):
        for name, v in (("eta_det", self.eta_det), ("eta_esc", self.eta_esc)):
            if not (0.0 < v <= 1.0):
                raise DomainError(f"{name} = {v} outside (0, 1]")

    @property
    def total(self):
        return self.eta_det * self.eta_esc


@dataclass(frozen=True)
class QuadratureVariances:
    x_sum: float
    x_diff: float
    y_sum: float
    y_diff: float

    @classmethod
    def from_branches(cls, correlated, anticorrelated):
        return cls(x_sum=correlated, x_diff=anticorrelated, y_sum=anticorrelated, y_diff=correlated)


@dataclass(frozen=True)
class EntanglementReport:
    correlation_dB: float  # amplitude sum, positive = below SNL
    phase_correlation_dB: float  # phase difference
    anti_correlation_dB: float  # amplitude difference, positive = above SNL
    duan_value: float
    entangled: bool


def _pump_ratio(P, P_thr):
    if P < 0:
        raise DomainError(f"pump power {P} must be non-negative")
    if P_thr <= 0:
        raise DomainError(f"threshold {P_thr} must be positive")
    return P / P_thr


def correlation_variance(P, P_thr, f, kappa, eta_det=1.0, eta_esc=1.0, branch=CORRELATED):
    """Two-mode quadrature variance at analysis frequency ``f`` (Hz).

    2 (1 -+ eta 4 sqrt(P/P_thr) / ((1 +- sqrt(P/P_thr))^2 + 4 (2 pi f / kappa)^2))
    with upper signs for the correlated branch. ``kappa`` in rad/s. ``f`` may
    be an array.
    """
    x = _pump_ratio(P, P_thr)
    if x > 1:
        raise ThresholdError(f"P/P_thr = {x:.6g} above threshold: outside the below-threshold model")
    if kappa <= 0:
        raise DomainError("decay rate must be positive")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DomainError("analysis frequency must be non-negative")
    if branch not in (CORRELATED, ANTICORRELATED):
        raise DomainError(f"unknown branch {branch!r}")
    s = np.sqrt(x)
    omega = 2.0 * (2.0 * np.pi * f / kappa)
    eta = eta_det * eta_esc
    if branch == CORRELATED:
        # (1 + s)^2 - 4 eta s rewritten so nothing cancels near threshold
        den = (1.0 + s) ** 2 + omega**2
        v = SNL * ((1.0 - s) ** 2 + 4.0 * s * (1.0 - eta) + omega**2) / den
    else:
        if x == 1.0:
            raise ThresholdError("anticorrelated variance diverges at threshold")
        v = SNL * (1.0 + eta * 4.0 * s / ((1.0 - s) ** 2 + omega**2))
    return float(v) if v.ndim == 0 else v


def threshold_power(T0, L0, T, L, chi):
    """Oscillation threshold (T0 + L0)^2 (T + L)^2 / (8 chi^2 T0), in W."""
    if chi == 0 or T0 == 0:
        raise ModelError("threshold diverges for chi = 0 or T0 = 0")
    for name, v in (("T0", T0), ("L0", L0), ("T", T), ("L", L)):
        if not (0.0 <= v < 1.0):
            raise DomainError(f"{name} = {v} outside [0, 1)")
    if chi < 0 or T0 < 0:
        raise DomainError("chi and T0 must be positive")
    return (T0 + L0) ** 2 * (T + L) ** 2 / (8.0 * chi**2 * T0)


def fit_chi(measured_threshold, T0, L0, T, L):
    """Invert the threshold formula for the nonlinear coefficient."""
    if measured_threshold <= 0 or T0 <= 0 or T + L <= 0 or L0 < 0:
        raise DomainError("threshold, T0 and T + L must be positive")
    return (T0 + L0) * (T + L) / np.sqrt(8.0 * T0 * measured_threshold)


def pump_buildup(T0, L0):
    """Resonant circulating-pump enhancement 4 T0 / (T0 + L0)^2.

    A pump that is not resonant needs this factor more input power to reach
    threshold.
    """
    if not (0.0 < T0 < 1.0) or not (0.0 <= L0 < 1.0):
        raise DomainError("T0 must lie in (0, 1) and L0 in [0, 1)")
    return 4.0 * T0 / (T0 + L0) ** 2


def infer_pump_loss(threshold_ratio, T0):
    """Pump round-trip loss that reproduces a non-resonant/resonant threshold ratio."""
    if threshold_ratio <= 1:
        raise DomainError(f"threshold ratio {threshold_ratio} must exceed 1")
    L0 = 2.0 * np.sqrt(T0 / threshold_ratio) - T0
    if L0 < 0:
        raise ModelError(f"threshold ratio {threshold_ratio} implies negative pump loss ({L0:.4g}) for T0 = {T0}")
    return float(L0)


def parametric_gain(P, P_thr, phase="amplify"):
    """Classical seed gain (1 -+ sqrt(P/P_thr))^-2."""
    x = _pump_ratio(P, P_thr)
    if x >= 1:
        raise ThresholdError(f"P/P_thr = {x:.6g}: gain diverges at and above threshold")
    s = np.sqrt(x)
    if phase == "amplify":
        return 1.0 / (1.0 - s) ** 2
    if phase == "deamplify":
        return 1.0 / (1.0 + s) ** 2
    raise DomainError(f"unknown phase {phase!r}")


def gain_to_pump_ratio(gain):
    """P/P_thr producing amplification ``gain``."""
    if gain < 1:
        raise DomainError("amplification gain must be >= 1")
    return float((1.0 - 1.0 / np.sqrt(gain)) ** 2)


def to_dB(variance):
    """Level relative to the SNL in dB (negative = below SNL)."""
    return 10.0 * np.log10(np.asarray(variance) / SNL)


def from_dB(level_dB):
    return SNL * 10.0 ** (np.asarray(level_dB) / 10.0)


def entanglement_report(variances):
    v = variances
    values = np.array([v.x_sum, v.x_diff, v.y_sum, v.y_diff], dtype=float)
    if np.any(values <= 0):
        raise DomainError("variances must be positive")
    duan = v.x_sum + v.y_diff
    return EntanglementReport(
        correlation_dB=float(-to_dB(v.x_sum)),
        phase_correlation_dB=float(-to_dB(v.y_diff)),
        anti_correlation_dB=float(to_dB(v.x_diff)),
        duan_value=float(duan),
        entangled=bool(duan < 2 * SNL),
    )


@dataclass(frozen=True)
class QuadratureSpectrum:
    frequency: np.ndarray
    x_sum: np.ndarray
    x_diff: np.ndarray
    y_sum: np.ndarray
    y_diff: np.ndarray

    @property
    def correlation_dB(self):
        """Amplitude-sum level relative to SNL (negative = squeezed)."""
        return to_dB(self.x_sum)

    def at(self, i):
        return QuadratureVariances(float(self.x_sum[i]), float(self.x_diff[i]), float(self.y_sum[i]), float(self.y_diff[i]))


def variance_spectrum(pump, kappa, detection, f_grid):
    """All four combinations over an ascending, positive frequency grid."""
    f = np.atleast_1d(np.asarray(f_grid, dtype=float))
    if np.any(f <= 0) or np.any(np.diff(f) <= 0):
        raise DomainError("frequency grid must be positive and strictly ascending")
    corr = correlation_variance(pump.pump_power, pump.threshold, f, kappa, detection.eta_det, detection.eta_esc, CORRELATED)
    anti = correlation_variance(pump.pump_power, pump.threshold, f, kappa, detection.eta_det, detection.eta_esc, ANTICORRELATED)
    corr, anti = np.atleast_1d(corr), np.atleast_1d(anti)
    return QuadratureSpectrum(f, corr, anti, anti.copy(), corr.copy())
