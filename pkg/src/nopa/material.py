"""Refractive-index model for the nonlinear crystal and type-II phase matching.

Indices follow a generic Sellmeier form with wavelength in micrometres::

    n^2 = A + sum B/(lam^2 - C) + sum B/(1 - C/lam^2) - D*lam^2

("poles" and "resonances" respectively), plus a first-order thermo-optic
correction whose slope is a power series in wavelength. Coefficients are
never hard-coded; they come from the JSON files in ``nopa/data``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError, PhaseMatchingError

WAVELENGTH_WINDOW_UM = (0.4, 1.5)
TEMPERATURE_WINDOW_C = (0.0, 200.0)
DEFAULT_DISPERSION = "ktp_kato2002.json"


class CrystalAxis(str, enum.Enum):
    x = "x"
    y = "y"
    z = "z"


class Role(str, enum.Enum):
    signal = "signal"
    idler = "idler"
    pump = "pump"


@dataclass(frozen=True)
class OpticalMode:
    role: Role
    vacuum_wavelength: float  # m
    polarization_axis: CrystalAxis


def default_modes(wavelength=1080e-9, signal_axis="y", idler_axis="z", pump_axis="y"):
    """Signal, idler and pump for degenerate type-II operation along x."""
    modes = (
        OpticalMode(Role.signal, wavelength, CrystalAxis(signal_axis)),
        OpticalMode(Role.idler, wavelength, CrystalAxis(idler_axis)),
        OpticalMode(Role.pump, wavelength / 2, CrystalAxis(pump_axis)),
    )
    validate_modes(modes)
    return modes


def validate_modes(modes, propagation_axis=CrystalAxis.x):
    signal, idler, pump = modes
    if (signal.role, idler.role, pump.role) != (Role.signal, Role.idler, Role.pump):
        raise DomainError("modes must be ordered (signal, idler, pump)")
    if not np.isclose(signal.vacuum_wavelength, idler.vacuum_wavelength, rtol=1e-12, atol=0):
        raise DomainError("only frequency-degenerate operation is supported (signal == idler wavelength)")
    if signal.polarization_axis == idler.polarization_axis:
        raise DomainError("signal and idler must be polarized along orthogonal axes")
    if not np.isclose(pump.vacuum_wavelength, signal.vacuum_wavelength / 2, rtol=1e-12, atol=0):
        raise DomainError("pump wavelength must be half the subharmonic wavelength")
    for m in modes:
        if m.polarization_axis == propagation_axis:
            raise DomainError(f"{m.role.value} polarized along the propagation axis {propagation_axis.value}")


@dataclass(frozen=True)
class SellmeierSet:
    """Dispersion and thermo-optic coefficients for one principal axis."""

    axis: CrystalAxis
    A: float
    poles: tuple = ()
    resonances: tuple = ()
    D: float = 0.0
    thermo_scale: float = 1.0
    thermo_powers: tuple = ()
    thermo_coefficients: tuple = ()
    source: str = ""

    def index_at_reference(self, lam_um):
        lam2 = np.asarray(lam_um, dtype=float) ** 2
        n2 = self.A - self.D * lam2
        for b, c in self.poles:
            n2 = n2 + b / (lam2 - c)
        for b, c in self.resonances:
            n2 = n2 + b / (1.0 - c / lam2)
        return np.sqrt(n2)

    def dn_dT(self, lam_um):
        lam = np.asarray(lam_um, dtype=float)
        slope = np.zeros_like(lam)
        for p, a in zip(self.thermo_powers, self.thermo_coefficients):
            slope = slope + a * lam**p
        return self.thermo_scale * slope


@dataclass(frozen=True)
class DispersionModel:
    sets: dict
    reference_temperature: float  # degC
    source: str = ""
    path: str | None = field(default=None, compare=False)

    def __post_init__(self):
        missing = set(CrystalAxis) - set(self.sets)
        if missing:
            raise DomainError(f"dispersion model lacks axes {sorted(a.value for a in missing)}")

    def with_thermo_scale(self, axis, factor):
        """Copy with the dn/dT of one axis multiplied by ``factor``."""
        axis = CrystalAxis(axis)
        sets = dict(self.sets)
        s = sets[axis]
        sets[axis] = SellmeierSet(
            s.axis, s.A, s.poles, s.resonances, s.D, s.thermo_scale * factor,
            s.thermo_powers, s.thermo_coefficients, s.source,
        )
        return DispersionModel(sets, self.reference_temperature, self.source)


def _check_window(lam_um, temperature):
    lam = np.asarray(lam_um, dtype=float)
    t = np.asarray(temperature, dtype=float)
    lo, hi = WAVELENGTH_WINDOW_UM
    # absorb round-off from the m -> um conversion at the window edges
    lo, hi = lo * (1 - 1e-12), hi * (1 + 1e-12)
    if np.any(~np.isfinite(lam)) or np.any(lam < lo) or np.any(lam > hi):
        bad = lam[(lam < lo) | (lam > hi) | ~np.isfinite(lam)].ravel() if lam.ndim else lam
        raise DomainError(f"wavelength {np.ravel(bad)[0] * 1e3:.6g} nm outside [{lo * 1e3:.4g}, {hi * 1e3:.4g}] nm")
    lo, hi = TEMPERATURE_WINDOW_C
    if np.any(~np.isfinite(t)) or np.any(t < lo) or np.any(t > hi):
        bad = t[(t < lo) | (t > hi) | ~np.isfinite(t)].ravel() if t.ndim else t
        raise DomainError(f"temperature {np.ravel(bad)[0]:.6g} degC outside [{lo:g}, {hi:g}] degC")


def refractive_index(model, axis, wavelength, temperature):
    """Index along ``axis`` at vacuum wavelength (m) and temperature (degC).

    Accepts scalars or broadcastable arrays; returns a float for scalar input.
    """
    lam_um = np.asarray(wavelength, dtype=float) * 1e6
    _check_window(lam_um, temperature)
    s = model.sets[CrystalAxis(axis)]
    n = s.index_at_reference(lam_um) + s.dn_dT(lam_um) * (np.asarray(temperature, dtype=float) - model.reference_temperature)
    return float(n) if np.ndim(n) == 0 else n


def mode_index(model, mode, temperature):
    return refractive_index(model, mode.polarization_axis, mode.vacuum_wavelength, temperature)


# -- loading -----------------------------------------------------------------

def _validate_set(s, reference_temperature):
    lam = np.linspace(*WAVELENGTH_WINDOW_UM, 221)
    n_ref = s.index_at_reference(lam)
    if not np.all(np.isfinite(n_ref)):
        raise DomainError(f"axis {s.axis.value}: Sellmeier fit not finite over the wavelength window")
    for t in (20.0, 70.0, 120.0):
        n = n_ref + s.dn_dT(lam) * (t - reference_temperature)
        if np.any(n <= 1) or np.any(n >= 3):
            raise DomainError(f"axis {s.axis.value}: index leaves (1, 3) at {t:g} degC")
        if np.any(np.diff(n) >= 0):
            raise DomainError(f"axis {s.axis.value}: dispersion not normal (dn/dlambda >= 0) at {t:g} degC")


def dispersion_from_dict(data, path=None):
    if "axes" not in data:
        raise DomainError("dispersion file needs an 'axes' list")
    if data.get("wavelength_unit", "um") != "um":
        raise DomainError("only wavelength_unit 'um' is supported")
    sets = {}
    refs = set()
    for entry in data["axes"]:
        try:
            axis = CrystalAxis(entry["axis"])
            sm = entry["sellmeier"]
            to = entry["thermo_optic"]
            ref = float(entry.get("reference_temperature_c", data.get("reference_temperature_c")))
            s = SellmeierSet(
                axis=axis,
                A=float(sm["A"]),
                poles=tuple((float(b), float(c)) for b, c in sm.get("poles", [])),
                resonances=tuple((float(b), float(c)) for b, c in sm.get("resonances", [])),
                D=float(sm.get("D", 0.0)),
                thermo_scale=float(to.get("scale", 1.0)),
                thermo_powers=tuple(int(p) for p in to["powers"]),
                thermo_coefficients=tuple(float(a) for a in to["coefficients"]),
                source=str(entry.get("source", data.get("source", ""))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed dispersion entry {entry.get('axis', '?')!r}: {exc}") from exc
        if len(s.thermo_powers) != len(s.thermo_coefficients):
            raise DomainError(f"axis {axis.value}: thermo_optic powers/coefficients length mismatch")
        if axis in sets:
            raise DomainError(f"axis {axis.value} listed twice")
        sets[axis] = s
        refs.add(ref)
    if len(refs) != 1:
        raise DomainError("all axes must share one reference temperature")
    ref = refs.pop()
    for s in sets.values():
        _validate_set(s, ref)
    return DispersionModel(sets, ref, str(data.get("source", "")), None if path is None else str(path))


def load_dispersion(path=None):
    """Load a coefficient file; ``None`` loads the packaged default set."""
    if path is None:
        text = resources.files("nopa.data").joinpath(DEFAULT_DISPERSION).read_text()
        path = f"nopa.data/{DEFAULT_DISPERSION}"
    else:
        p = Path(path)
        if not p.exists() and not p.is_absolute():
            packaged = resources.files("nopa.data").joinpath(p.name)
            if packaged.is_file():
                return dispersion_from_dict(json.loads(packaged.read_text()), f"nopa.data/{p.name}")
        text = p.read_text()
    return dispersion_from_dict(json.loads(text), path)


# -- phase matching ----------------------------------------------------------

@dataclass(frozen=True)
class PhaseMatch:
    temperature: float  # degC
    bracket: tuple
    delta_n: float
    degenerate: bool = False


def index_mismatch(model, modes, temperature):
    """n_pump - (n_signal + n_idler)/2 for collinear degenerate type-II."""
    signal, idler, pump = modes
    return mode_index(model, pump, temperature) - 0.5 * (
        mode_index(model, signal, temperature) + mode_index(model, idler, temperature)
    )


def mismatch_temperature_slope(model, modes):
    """d/dT of the index mismatch; constant under the first-order thermo-optic model."""
    signal, idler, pump = modes
    slope = {m.role: model.sets[CrystalAxis(m.polarization_axis)].dn_dT(m.vacuum_wavelength * 1e6) for m in modes}
    return float(slope[Role.pump] - 0.5 * (slope[Role.signal] + slope[Role.idler]))


def phase_matching_half_width(model, modes, crystal_length):
    """Half width (K) of the sinc^2 temperature acceptance of a crystal of given length.

    The phase mismatch is (4 pi / lambda_s) * delta_n; sinc^2(dk L / 2) falls
    to one half at dk L / 2 = 1.39156.
    """
    slope = abs(mismatch_temperature_slope(model, modes))
    if slope == 0:
        return np.inf
    lam = modes[0].vacuum_wavelength
    return float(1.39156 * lam / (2.0 * np.pi * crystal_length * slope))


def phase_matching_temperature(model, modes, window=(0.0, 200.0), step=1.0, tol=1e-9):
    """Temperature where the type-II index-matching condition holds.

    Scans ``window`` in ``step`` increments for a sign change of the mismatch,
    then bisects that bracket to |mismatch| < ``tol`` and a width below 1 nK. A mismatch that is
    identically zero over the window is reported as ``degenerate``.
    """
    temps = np.arange(window[0], window[1] + 0.5 * step, step)
    temps[-1] = min(temps[-1], window[1])
    dn = np.asarray(index_mismatch(model, modes, temps), dtype=float)
    if np.max(np.abs(dn)) < tol:
        mid = 0.5 * (window[0] + window[1])
        return PhaseMatch(mid, (float(window[0]), float(window[1])), float(index_mismatch(model, modes, mid)), True)
    exact = np.flatnonzero(dn == 0.0)
    if exact.size:
        t = float(temps[exact[0]])
        return PhaseMatch(t, (t, t), 0.0)
    sign_change = np.flatnonzero(np.sign(dn[:-1]) != np.sign(dn[1:]))
    if not sign_change.size:
        raise PhaseMatchingError(
            f"no phase-matching point in [{window[0]:g}, {window[1]:g}] degC "
            f"(mismatch from {dn.min():.3e} to {dn.max():.3e})"
        )
    k = sign_change[0]
    lo, hi = float(temps[k]), float(temps[k + 1])
    f_lo = dn[k]
    bracket = (lo, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = index_mismatch(model, modes, mid)
        # the mismatch slope is ~1e-6 /K, so |mismatch| < tol alone leaves mK errors
        if f_mid == 0.0 or (abs(f_mid) < tol and hi - lo < 1e-9):
            break
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return PhaseMatch(mid, bracket, float(f_mid))
