"""Linear optics of the half-monolithic cavity with a wedged crystal.

The cavity is: flat HR front face of the crystal (input coupler for the pump),
crystal of length ``l_x`` with a wedged, AR-coated end face, an air gap and a
concave output coupler. Translating the crystal by ``d`` along y trades
crystal path for air path at the rate ``tan(theta)``.

Units are SI throughout (m, rad, Hz, rad/s); temperatures in degC.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ModelError, StabilityError
from .material import Role, mode_index

C_LIGHT = 299_792_458.0
_WAVELENGTH_MATCH_RTOL = 1e-6


@dataclass(frozen=True)
class CoatingSpec:
    """Power transmissivity and excess loss per vacuum wavelength."""

    transmissivity: dict = field(default_factory=dict)
    loss: dict = field(default_factory=dict)

    def __post_init__(self):
        for lam, t in self.transmissivity.items():
            extra = self.loss.get(lam, 0.0)
            if not (0.0 <= t <= 1.0) or extra < 0.0 or t + extra > 1.0:
                raise DomainError(f"coating at {lam * 1e9:.1f} nm: T={t}, loss={extra} violates T + loss <= 1")

    def _lookup(self, table, wavelength):
        for lam, value in table.items():
            if abs(lam - wavelength) <= _WAVELENGTH_MATCH_RTOL * wavelength:
                return value
        return None

    def T(self, wavelength):
        value = self._lookup(self.transmissivity, wavelength)
        if value is None:
            raise DomainError(f"coating has no transmissivity listed at {wavelength * 1e9:.1f} nm")
        return value

    def excess_loss(self, wavelength):
        value = self._lookup(self.loss, wavelength)
        return 0.0 if value is None else value


@dataclass(frozen=True)
class WedgedCrystal:
    length: float  # l_x, along propagation
    aperture: tuple  # (width along y, height along z)
    wedge_angle: float  # rad
    front_coating: CoatingSpec
    end_coating: CoatingSpec = field(default_factory=CoatingSpec)

    def __post_init__(self):
        if self.length <= 0:
            raise DomainError("crystal length must be positive")
        if not (0.0 <= self.wedge_angle < np.deg2rad(5.0)):
            raise DomainError(f"wedge angle {np.rad2deg(self.wedge_angle):.4g} deg outside [0, 5) deg")
        if min(self.aperture) <= 0:
            raise DomainError("crystal aperture must be positive")
        if self.aperture[0] * np.tan(self.wedge_angle) >= self.length:
            raise DomainError("wedge removes the whole crystal within the aperture")


@dataclass(frozen=True)
class NopaGeometry:
    crystal: WedgedCrystal
    air_gap: float  # l_air
    mirror_radius: float  # concave output coupler, R > 0
    output_coupler: CoatingSpec
    loss_subharmonic: float = 0.003  # L
    loss_pump: float = 0.053  # L0

    def __post_init__(self):
        if self.air_gap <= 0 or self.mirror_radius <= 0:
            raise DomainError("air gap and mirror radius must be positive")
        for name, v in (("loss_subharmonic", self.loss_subharmonic), ("loss_pump", self.loss_pump)):
            if not (0.0 <= v <= 0.2):
                raise DomainError(f"{name} = {v} outside [0, 0.2]")

    @property
    def total_length(self):
        return self.crystal.length + self.air_gap

    def coupling(self, mode):
        """(total mirror transmission, intracavity loss, output-coupler T) for ``mode``."""
        lam = mode.vacuum_wavelength
        t_front = self.crystal.front_coating.T(lam)
        t_out = self.output_coupler.T(lam)
        base = self.loss_pump if mode.role is Role.pump else self.loss_subharmonic
        extra = (
            self.crystal.front_coating.excess_loss(lam)
            + self.crystal.end_coating.excess_loss(lam)
            + self.output_coupler.excess_loss(lam)
        )
        useful = t_front if mode.role is Role.pump else t_out
        return t_front + t_out, base + extra, useful


def optical_path_length(geom, n, d, trim=0.0):
    """Round-trip optical path 2n(l_x - d tan0) + 2(l_air + trim + d tan0)."""
    d_arr = np.asarray(d, dtype=float)
    width = geom.crystal.aperture[0]
    if np.any(d_arr < 0) or np.any(d_arr > width):
        raise DomainError(f"wedge offset d outside crystal aperture [0, {width * 1e3:g}] mm")
    if np.any(np.asarray(n) <= 1):
        raise DomainError("refractive index must exceed 1")
    shift = d_arr * np.tan(geom.crystal.wedge_angle)
    return 2.0 * n * (geom.crystal.length - shift) + 2.0 * (geom.air_gap + trim + shift)


def optical_path_slope(geom, n):
    """d(optical path)/dd; the path is affine in d."""
    return 2.0 * (1.0 - n) * np.tan(geom.crystal.wedge_angle)


# -- Gaussian beam -----------------------------------------------------------

class GouyPhase(NamedTuple):
    round_trip: float  # accumulated over one full round trip
    phi_g: float  # quarter of round trip, the convention entering -4*phi_g
    g_product: float


def _compose(outer, inner):
    """Product of 2x2 ray matrices stored as (A, B, C, D) tuples of arrays."""
    a2, b2, c2, d2 = outer
    a1, b1, c1, d1 = inner
    return (a2 * a1 + b2 * c1, a2 * b1 + b2 * d1, c2 * a1 + d2 * c1, c2 * b1 + d2 * d1)


def _element(kind, value):
    one, zero = np.ones_like(value), np.zeros_like(value)
    if kind == "free":
        return (one, value, zero, one)
    return (one, zero, -2.0 / value, one)


def _gouy_advance(q, length):
    """Gouy phase gained propagating complex parameter q over ``length``."""
    q_out = q + length
    return np.arctan2(q_out.real, q_out.imag) - np.arctan2(q.real, q.imag), q_out


def effective_length(geom, n):
    """Diffraction length: air gap plus reduced crystal length l_x/n."""
    return geom.air_gap + geom.crystal.length / n


def round_trip_gouy(geom, n):
    """Round-trip Gouy phase of the TEM00 eigenmode for crystal index ``n``.

    The eigenmode is found from the round-trip ray matrix starting at the flat
    face; the phase is accumulated by propagating the complex beam parameter
    through crystal (reduced length), air gap, the concave mirror and back.
    ``n`` may be an array.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n <= 1):
        raise DomainError("refractive index must exceed 1")
    l_cr = geom.crystal.length / n
    l_air = np.full_like(n, geom.air_gap)
    radius = np.full_like(n, geom.mirror_radius)
    g_product = 1.0 - (l_cr + l_air) / radius  # flat face: g1 = 1
    if np.any(g_product <= 0.0) or np.any(g_product >= 1.0):
        bad = g_product[(g_product <= 0) | (g_product >= 1)] if g_product.ndim else g_product
        raise StabilityError(float(np.ravel(bad)[0]))
    segments = [("free", l_cr), ("free", l_air), ("mirror", radius), ("free", l_air), ("free", l_cr)]
    m = _element("free", np.zeros_like(n))
    for kind, value in segments:
        m = _compose(_element(kind, value), m)
    a, b, _, dd = m
    half_trace = 0.5 * (a + dd)
    # stable eigenmode: 1/q = (D - A)/(2B) - i sqrt(1 - m^2)/|B|
    q = 1.0 / ((dd - a) / (2.0 * b) - 1j * np.sqrt(1.0 - half_trace**2) / np.abs(b))
    total = np.zeros_like(n)
    for kind, value in segments:
        if kind == "free":
            dpsi, q = _gouy_advance(q, value)
            total = total + dpsi
        else:
            q = q / (-2.0 / value * q + 1.0)
    if total.ndim == 0:
        return GouyPhase(float(total), float(total) / 4.0, float(g_product))
    return GouyPhase(total, total / 4.0, g_product)


# -- round-trip phase --------------------------------------------------------

class RoundTripPhase(NamedTuple):
    total: np.ndarray
    wrapped: np.ndarray  # in [0, 2*pi)


def round_trip_phase(geom, mode, model, temperature, d, length_trim=0.0):
    """Phi = (2 pi/lambda) l(n, d) - 4 Phi_G(n).

    The Gouy term is evaluated at the untrimmed air gap: the piezo trim is a
    sub-micron displacement whose diffraction effect is ignored, so one
    half-wave of trim advances Phi by exactly 2 pi.
    """
    n = mode_index(model, mode, temperature)
    lam = mode.vacuum_wavelength
    path = optical_path_length(geom, n, d, length_trim)
    gouy = round_trip_gouy(geom, n).round_trip
    total = 2.0 * np.pi / lam * path - gouy
    if np.ndim(total) == 0:
        total = float(total)
    return RoundTripPhase(total, np.mod(total, 2.0 * np.pi))


# -- losses and linewidth ----------------------------------------------------

def finesse(T_total, L):
    """Cavity finesse 2 pi / (T + L), the small-loss relation.

    This is the relation that maps the measured finesse 49 onto
    T = 12.5 % and L = 0.3 %. ``airy_finesse`` gives the exact Airy value;
    the two agree within 3 % for T + L below about 0.06.
    """
    total = T_total + L
    if total <= 0:
        raise ModelError("lossless and uncoupled cavity: finesse diverges")
    if total >= 1:
        raise DomainError(f"round-trip loss T + L = {total} must be < 1")
    return 2.0 * np.pi / total


def round_trip_survival(*fractions):
    rho = 1.0
    for f in fractions:
        rho *= 1.0 - f
    return rho


def airy_finesse(rho):
    """Exact Airy finesse pi sqrt(g)/(1 - g), g = sqrt(rho) the round-trip field factor."""
    if not (0.0 < rho < 1.0):
        raise DomainError(f"round-trip power survival {rho} must lie in (0, 1)")
    g = np.sqrt(rho)
    return np.pi * np.sqrt(g) / (1.0 - g)


def escape_efficiency(T, L):
    if T <= 0:
        raise ModelError("escape efficiency undefined without output coupling (T = 0)")
    if L < 0:
        raise DomainError("loss must be non-negative")
    return T / (T + L)


@dataclass(frozen=True)
class CavityModeParams:
    mode: object
    round_trip_optical_length: float
    fsr: float
    T_total: float
    loss: float
    finesse: float
    escape_efficiency: float

    @property
    def fwhm(self):
        return self.fsr / self.finesse


def cavity_mode_params(geom, mode, model, temperature, d=0.0, length_trim=0.0):
    n = mode_index(model, mode, temperature)
    length = float(optical_path_length(geom, n, d, length_trim))
    t_total, loss, useful = geom.coupling(mode)
    return CavityModeParams(
        mode=mode,
        round_trip_optical_length=length,
        fsr=C_LIGHT / length,
        T_total=t_total,
        loss=loss,
        finesse=finesse(t_total, loss),
        escape_efficiency=escape_efficiency(useful, t_total - useful + loss),
    )


KAPPA_CONVENTIONS = ("amplitude", "energy")


def decay_rate(params, convention="amplitude"):
    """Cavity decay rate in rad/s.

    ``amplitude``: kappa = (T + L) FSR / 2, the field decay rate, so the
    Lorentzian half-width at half-maximum is kappa/2pi in Hz.
    ``energy``: twice that.
    """
    if convention not in KAPPA_CONVENTIONS:
        raise DomainError(f"unknown kappa convention {convention!r}")
    kappa = (params.T_total + params.loss) * params.fsr / 2.0
    return kappa if convention == "amplitude" else 2.0 * kappa


def hwhm_hz(kappa, convention="amplitude"):
    return kappa / (2.0 * np.pi) if convention == "amplitude" else kappa / (4.0 * np.pi)


# -- Airy function -----------------------------------------------------------

def airy_lineshape(detuning, rho):
    """Transmission normalized to 1 on resonance; ``rho`` is round-trip power survival."""
    g = np.sqrt(rho)
    coeff = 4.0 * g / (1.0 - g) ** 2
    return 1.0 / (1.0 + coeff * np.sin(np.asarray(detuning) / 2.0) ** 2)


def airy_floor(rho):
    """Anti-resonant value of ``airy_lineshape``."""
    g = np.sqrt(rho)
    return ((1.0 - g) / (1.0 + g)) ** 2


def airy_transmission(detuning, input_T, output_T, L=0.0):
    """Transmitted power fraction of a two-mirror cavity with round-trip loss L."""
    rho = round_trip_survival(input_T, output_T, L)
    g = np.sqrt(rho)
    peak = input_T * output_T / (1.0 - g) ** 2
    return peak * airy_lineshape(detuning, rho)
