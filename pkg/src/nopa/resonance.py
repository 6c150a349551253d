"""Operating points where signal, idler and pump resonate simultaneously.

Three controls act on the round-trip phases: crystal temperature, the wedge
offset ``d`` and the piezo length trim. The search is sequential, as in the
lab: temperature brings signal and idler into coincidence (the trim cancels
out of their difference because they share a wavelength), then the crystal
is walked along ``d`` while the double resonance is held, and every zero of
the pump detuning is polished by a 3-D Newton iteration.

Residuals are fractional detunings: the round-trip phase wrapped into
[-pi, pi) divided by 2 pi.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cavity import finesse, round_trip_gouy
from .errors import (
    ConditioningError,
    DegenerateWedgeError,
    DomainError,
    PhaseMatchingError,
    ResonanceSearchError,
)
from .material import default_modes, mode_index, phase_matching_temperature


class ResonanceResidual(NamedTuple):
    signal: float
    idler: float
    pump: float

    def max_abs(self):
        return float(np.max(np.abs(np.asarray(self, dtype=float))))


@dataclass(frozen=True)
class SearchDomain:
    temperature_range: tuple = (20.0, 120.0)  # degC
    d_range: tuple = (0.0, 3e-3)  # m
    trim_range: tuple | None = None  # m; default one subharmonic half-wave [0, lambda_s/2)
    temperature_step: float = 0.05  # K, coarse scan
    d_step: float = 2e-6  # m, coarse scan
    tolerance: float = 1e-8  # residual, fraction of 2 pi
    max_iterations: int = 50

    def __post_init__(self):
        t0, t1 = self.temperature_range
        d0, d1 = self.d_range
        if not t1 > t0 or not d1 > d0:
            raise DomainError("search ranges must be non-empty")
        if self.temperature_step <= 0 or self.d_step <= 0 or self.tolerance <= 0:
            raise DomainError("grid steps and tolerance must be positive")


@dataclass(frozen=True)
class ResonanceSolution:
    temperature: float
    wedge_offset: float
    length_trim: float
    mode_numbers: tuple
    residual: ResonanceResidual
    classification: str
    phase_matching_temperature: float | None = None
    branch: int | None = None

    def as_dict(self):
        return {
            "temperature_c": self.temperature,
            "wedge_offset_m": self.wedge_offset,
            "length_trim_m": self.length_trim,
            "mode_numbers": {"signal": self.mode_numbers[0], "idler": self.mode_numbers[1], "pump": self.mode_numbers[2]},
            "residual": dict(self.residual._asdict()),
            "classification": self.classification,
            "phase_matching_temperature_c": self.phase_matching_temperature,
        }


def _wrap(cycles):
    return np.mod(np.asarray(cycles) + 0.5, 1.0) - 0.5


class _PhaseEvaluator:
    """Round-trip phases in cycles (Phi / 2 pi) for all three modes.

    Same formula as ``cavity.round_trip_phase`` but without the aperture
    check, so Newton iterates may step marginally outside ``d`` bounds.
    """

    def __init__(self, geom, model, modes):
        self.geom, self.model, self.modes = geom, model, modes
        self.tan = np.tan(geom.crystal.wedge_angle)
        self.lx = geom.crystal.length

    def index(self, j, temperature):
        return mode_index(self.model, self.modes[j], temperature)

    def cycles(self, j, temperature, d, trim):
        n = self.index(j, temperature)
        lam = self.modes[j].vacuum_wavelength
        shift = np.asarray(d) * self.tan
        path = 2.0 * n * (self.lx - shift) + 2.0 * (self.geom.air_gap + trim + shift)
        return path / lam - round_trip_gouy(self.geom, n).round_trip / (2.0 * np.pi)

    def all_cycles(self, temperature, d, trim):
        return np.array([self.cycles(j, temperature, d, trim) for j in range(3)])

    def jacobian(self, temperature, d, trim, dT=1e-3):
        """Rows: modes; columns: (T, d, trim). Cycles per K, per m, per m."""
        jac = np.empty((3, 3))
        for j in range(3):
            lam = self.modes[j].vacuum_wavelength
            n = self.index(j, temperature)
            jac[j, 0] = (self.cycles(j, temperature + dT, d, trim) - self.cycles(j, temperature - dT, d, trim)) / (2 * dT)
            jac[j, 1] = 2.0 * (1.0 - n) * self.tan / lam
            jac[j, 2] = 2.0 / lam
        return jac


def _modes(modes):
    return default_modes() if modes is None else modes


def fractional_detunings(geom, model, temperature, d, trim, modes=None):
    """Each mode's round-trip phase wrapped into [-pi, pi), divided by 2 pi."""
    from .cavity import optical_path_length

    optical_path_length(geom, 2.0, d)  # aperture check only
    ev = _PhaseEvaluator(geom, model, _modes(modes))
    r = _wrap(ev.all_cycles(temperature, d, trim))
    if r.ndim == 1:
        return ResonanceResidual(*(float(x) for x in r))
    return ResonanceResidual(*r)


# -- classification ----------------------------------------------------------

@dataclass(frozen=True)
class ScanClassification:
    label: str
    signal_trim: float
    idler_trim: float
    pump_trim: float
    tolerance: float  # one subharmonic linewidth, in trim


def _circular_distance(a, b, period):
    x = np.mod(a - b, period)
    return min(x, period - x)


def subharmonic_linewidth_trim(geom, modes=None):
    """FWHM of a subharmonic resonance expressed as mirror displacement."""
    signal = _modes(modes)[0]
    t_total, loss, _ = geom.coupling(signal)
    return signal.vacuum_wavelength / 2.0 / finesse(t_total, loss)


def classify_point(geom, model, temperature, d, trim=0.0, modes=None):
    """Peak coincidence over one trim FSR, tolerance one linewidth.

    Phases are linear in the trim, so resonance positions follow directly
    from the detunings at ``trim``.
    """
    modes = _modes(modes)
    r = fractional_detunings(geom, model, temperature, d, trim, modes)
    lam_s, lam_p = modes[0].vacuum_wavelength, modes[2].vacuum_wavelength
    fsr_s, fsr_p = lam_s / 2.0, lam_p / 2.0
    t_s = np.mod(trim - r.signal * fsr_s, fsr_s)
    t_i = np.mod(trim - r.idler * fsr_s, fsr_s)
    t_p = np.mod(trim - r.pump * fsr_p, fsr_p)
    tol = subharmonic_linewidth_trim(geom, modes)
    sub = _circular_distance(t_s, t_i, fsr_s) <= tol
    pump = sub and _circular_distance(t_s, t_p, fsr_p) <= tol
    label = "triple" if pump else "double" if sub else "single"
    return ScanClassification(label, float(t_s), float(t_i), float(t_p), float(tol))


def classify_scan(geom, model, temperature, d, modes=None):
    return classify_point(geom, model, temperature, d, 0.0, modes).label


# -- Newton ------------------------------------------------------------------

def solve_operating_point(geom, model, x0, targets=(0.0, 0.0, 0.0), modes=None, tolerance=1e-8, max_iterations=50):
    """3-D Newton on wrapped detunings minus ``targets``.

    ``x0`` = (temperature, d, trim). Returns the converged (T, d, trim).
    """
    ev = _PhaseEvaluator(geom, model, _modes(modes))
    x = np.array(x0, dtype=float)
    targets = np.asarray(targets, dtype=float)
    for _ in range(max_iterations):
        r = _wrap(ev.all_cycles(*x) - targets)
        if np.max(np.abs(r)) < 1e-3 * tolerance:
            break
        jac = ev.jacobian(*x)
        # column scaling keeps the condition number meaningful across units
        scale = 1.0 / np.max(np.abs(jac), axis=0)
        js = jac * scale
        if np.linalg.cond(js) > 1e12:
            raise ConditioningError(f"resonance Jacobian singular at T={x[0]:.6g} degC, d={x[1]:.6g} m")
        step = np.linalg.solve(js, r) * scale
        x = x - step
        if np.max(np.abs(step * np.max(np.abs(jac), axis=0))) < 1e-14:
            break
    r = _wrap(ev.all_cycles(*x) - targets)
    if np.max(np.abs(r)) >= tolerance:
        raise ResonanceSearchError(f"Newton refinement did not converge (|residual| = {np.max(np.abs(r)):.3e})")
    return x


def newton_step_norm(geom, model, x, modes=None):
    """Size (in cycles) of the Newton correction at ``x``; ~0 at a solution."""
    ev = _PhaseEvaluator(geom, model, _modes(modes))
    r = _wrap(ev.all_cycles(*x))
    jac = ev.jacobian(*x)
    step = np.linalg.solve(jac, r)
    return float(np.max(np.abs(jac @ step)))


def _reference_temperature(model, modes, domain):
    try:
        pm = phase_matching_temperature(model, modes, window=domain.temperature_range)
        if not pm.degenerate:
            return pm.temperature, pm.temperature
    except PhaseMatchingError:
        pass
    return 0.5 * sum(domain.temperature_range), None


def _signal_trim(ev, temperature, d, trim_range):
    lam = ev.modes[0].vacuum_wavelength
    r_s = _wrap(ev.cycles(0, temperature, d, 0.0))
    trim = -r_s * lam / 2.0
    lo = trim_range[0]
    return lo + np.mod(trim - lo, lam / 2.0)


def _mode_numbers(ev, x):
    return tuple(int(np.rint(c)) for c in ev.all_cycles(*x))


# -- double resonance --------------------------------------------------------

def double_resonance_period(model, modes, crystal_length):
    """Temperature spacing of signal/idler coincidences, lambda/(2 l_x |dn_s/dT - dn_i/dT|)."""
    from .material import CrystalAxis

    signal, idler, _ = modes
    lam_um = signal.vacuum_wavelength * 1e6
    slope = model.sets[CrystalAxis(signal.polarization_axis)].dn_dT(lam_um) - model.sets[
        CrystalAxis(idler.polarization_axis)
    ].dn_dT(lam_um)
    if slope == 0:
        return np.inf
    return float(signal.vacuum_wavelength / (2.0 * crystal_length * abs(slope)))


def _relative_cycles(ev, temperature, d):
    return ev.cycles(0, temperature, d, 0.0) - ev.cycles(1, temperature, d, 0.0)


def find_double_resonances(geom, model, domain=None, d=0.0, modes=None):
    """All signal/idler coincidence temperatures in the domain at offset ``d``."""
    domain = domain or SearchDomain()
    modes = _modes(modes)
    ev = _PhaseEvaluator(geom, model, modes)
    t0, t1 = domain.temperature_range
    temps = np.linspace(t0, t1, int(np.ceil((t1 - t0) / domain.temperature_step)) + 1)
    rel = _relative_cycles(ev, temps, d)
    if not np.isfinite(double_resonance_period(model, modes, geom.crystal.length)) or np.ptp(rel) < 1e-9:
        raise ResonanceSearchError(
            "degenerate: signal/idler relative phase is constant in temperature",
            {"relative_phase_cycles": float(rel[0])},
        )
    w = _wrap(rel)
    crossings = np.flatnonzero((np.sign(w[:-1]) != np.sign(w[1:])) & (np.abs(w[1:] - w[:-1]) < 0.5))
    if not crossings.size:
        raise ResonanceSearchError(
            "no double resonance in temperature range",
            {"relative_phase_min": float(w.min()), "relative_phase_max": float(w.max())},
        )
    roots = []
    for k in crossings:
        t = temps[k] - w[k] * (temps[k + 1] - temps[k]) / (w[k + 1] - w[k])
        for _ in range(domain.max_iterations):
            h = 1e-3
            f = _wrap(_relative_cycles(ev, t, d))
            slope = (_relative_cycles(ev, t + h, d) - _relative_cycles(ev, t - h, d)) / (2 * h)
            t -= f / slope
            if abs(f) < 1e-3 * domain.tolerance:
                break
        roots.append(float(t))
    return roots


def solve_double_resonance(geom, model, domain=None, modes=None, d=None):
    """Double-resonance point (T, trim) nearest the phase-matching temperature."""
    domain = domain or SearchDomain()
    modes = _modes(modes)
    ev = _PhaseEvaluator(geom, model, modes)
    d = domain.d_range[0] if d is None else d
    t_ref, t_pm = _reference_temperature(model, modes, domain)
    roots = find_double_resonances(geom, model, domain, d, modes)
    t = min(roots, key=lambda r: abs(r - t_ref))
    trim_range = domain.trim_range or (0.0, modes[0].vacuum_wavelength / 2.0)
    trim = float(_signal_trim(ev, t, d, trim_range))
    x = (t, d, trim)
    residual = fractional_detunings(geom, model, *x, modes)
    label = classify_point(geom, model, *x, modes).label
    return ResonanceSolution(t, d, trim, _mode_numbers(ev, x), residual, label, t_pm)


# -- triple resonance --------------------------------------------------------

def pump_relative_period(model, modes, geom, temperature):
    """d-period of the pump detuning at fixed T with the trim holding the signal resonant.

    The trim cancels the signal's path change, (1 - n_s) tan0 per unit d, and
    the pump sees what is left: lambda_p / (2 tan0 |n_p - n_s|).
    """
    signal, _, pump = modes
    tan = np.tan(geom.crystal.wedge_angle)
    n_s, n_p = mode_index(model, signal, temperature), mode_index(model, pump, temperature)
    if tan == 0 or n_p == n_s:
        return np.inf
    return float(pump.vacuum_wavelength / (2.0 * tan * abs(n_p - n_s)))


def triple_resonance_period(model, modes, geom, temperature, d):
    """d-spacing of triple resonances when T and trim re-establish the double resonance.

    Linearizing the three round-trip paths in (T, d, trim): T absorbs the
    signal/idler walk-off caused by the wedge, the trim absorbs the common
    shift, and the pump detuning advances by one cycle per returned period.
    """
    jac = _linear_jacobian(model, modes, geom, temperature, d)
    step = np.linalg.solve(jac, np.array([0.0, 0.0, 1.0]))
    return float(abs(step[1]))


def _linear_jacobian(model, modes, geom, temperature, d):
    from .material import CrystalAxis

    tan = np.tan(geom.crystal.wedge_angle)
    crystal = geom.crystal.length - d * tan
    a, b, c = [], [], []
    for m in modes:
        lam = m.vacuum_wavelength
        n = mode_index(model, m, temperature)
        slope = model.sets[CrystalAxis(m.polarization_axis)].dn_dT(lam * 1e6)
        a.append(2.0 * crystal * slope / lam)
        b.append(2.0 * (1.0 - n) * tan / lam)
        c.append(2.0 / lam)
    return np.array([a, b, c]).T


def triple_lattice_step(model, modes, geom, temperature, d, max_order=3):
    """Smallest-temperature-change step (dT, dd) between neighbouring triple resonances.

    Triple resonances form a lattice indexed by the integer mode-number
    changes (dm_s, dm_i, dm_p). Steps that only add half-waves to the trim
    are excluded; among the rest the one with the least temperature change
    is returned, oriented to positive dd. Successive solutions of a single
    temperature family are spaced by this dd.
    """
    inv = np.linalg.inv(_linear_jacobian(model, modes, geom, temperature, d))
    best = None
    rng = range(-max_order, max_order + 1)
    for dm in ((i, j, k) for i in rng for j in rng for k in rng):
        dx = inv @ np.array(dm, dtype=float)
        if abs(dx[1]) < 1e-9:  # pure trim shift or zero
            continue
        if best is None or abs(dx[0]) < abs(best[0]) - 1e-12:
            best = dx if dx[1] > 0 else -dx
    return float(best[0]), float(best[1])


@dataclass(frozen=True)
class DoubleBranch:
    """One signal/idler coincidence followed continuously along a d grid."""

    order: int  # signal minus idler round-trip cycles, constant on the branch
    d: np.ndarray
    temperature: np.ndarray
    trim: np.ndarray
    pump_residual: np.ndarray


def follow_double_resonance(geom, model, order, d_grid, temperature_range, modes=None, trim_range=None, iterations=8):
    """Coincidence temperature T(d) of branch ``order`` wherever it lies in ``temperature_range``.

    Mirrors the lab procedure of nudging the oven while translating the
    crystal so signal and idler stay together. Points whose temperature falls
    outside the range are dropped.
    """
    modes = _modes(modes)
    ev = _PhaseEvaluator(geom, model, modes)
    d_grid = np.asarray(d_grid, dtype=float)
    t_lo, t_hi = temperature_range
    t_mid = 0.5 * (t_lo + t_hi)
    h = 1e-3
    d_ends = np.array([d_grid[0], d_grid[-1]])
    rel = _relative_cycles(ev, t_mid, d_ends)
    dT = (_relative_cycles(ev, t_mid + h, d_ends) - _relative_cycles(ev, t_mid - h, d_ends)) / (2 * h)
    if np.any(np.abs(dT) < 1e-12):
        raise ResonanceSearchError("degenerate: signal/idler relative phase is constant in temperature")
    # linear prediction of the branch, then Newton on the retained points
    t_ends = t_mid + (order - rel) / dT
    t_pred = np.interp(d_grid, d_ends, t_ends)
    keep = (t_pred >= t_lo - 0.5) & (t_pred <= t_hi + 0.5)
    d_k, t = d_grid[keep], t_pred[keep]
    if d_k.size:
        for _ in range(iterations):
            slope = (_relative_cycles(ev, t + h, d_k) - _relative_cycles(ev, t - h, d_k)) / (2 * h)
            t = t - (_relative_cycles(ev, t, d_k) - order) / slope
        inside = (t >= t_lo) & (t <= t_hi)
        d_k, t = d_k[inside], t[inside]
    trim_range = trim_range or (0.0, modes[0].vacuum_wavelength / 2.0)
    trim = _signal_trim(ev, t, d_k, trim_range) if d_k.size else np.empty(0)
    pump = _wrap(ev.cycles(2, t, d_k, trim)) if d_k.size else np.empty(0)
    return DoubleBranch(int(order), d_k, t, np.asarray(trim), np.asarray(pump))


def _branch_orders(ev, d_range, temperature_range):
    corners = [_relative_cycles(ev, t, d) for t in temperature_range for d in d_range]
    return range(int(np.floor(min(corners))), int(np.ceil(max(corners))) + 1)


def triple_search_window(geom, model, domain, modes=None):
    """Temperatures allowed for a triple resonance: phase-matching acceptance within the domain."""
    from .material import phase_matching_half_width

    modes = _modes(modes)
    t_ref, t_pm = _reference_temperature(model, modes, domain)
    half = phase_matching_half_width(model, modes, geom.crystal.length)
    lo = max(domain.temperature_range[0], t_ref - half)
    hi = min(domain.temperature_range[1], t_ref + half)
    return (lo, hi), t_ref, t_pm


def find_triple_resonances(geom, model, domain=None, modes=None, temperature_window=None):
    """All triple-resonance points, following every double-resonance branch along d.

    Each branch is scanned for zero crossings of the pump detuning; each
    crossing is polished by 3-D Newton. Results are sorted by wedge offset,
    then by distance from the phase-matching temperature. By default the
    temperature is confined to the phase-matching acceptance (sinc^2 FWHM);
    pass ``temperature_window`` to override.
    """
    domain = domain or SearchDomain()
    modes = _modes(modes)
    if geom.crystal.wedge_angle == 0.0:
        raise DegenerateWedgeError("degenerate wedge: theta = 0 leaves d without effect on the relative phases")
    width = geom.crystal.aperture[0]
    d0, d1 = max(domain.d_range[0], 0.0), min(domain.d_range[1], width)
    if d1 <= d0:
        raise DomainError("d range lies outside the crystal aperture")
    window, t_ref, t_pm = triple_search_window(geom, model, domain, modes)
    if temperature_window is not None:
        window = tuple(temperature_window)
    ev = _PhaseEvaluator(geom, model, modes)
    d_grid = np.linspace(d0, d1, int(np.ceil((d1 - d0) / domain.d_step)) + 1)
    trim_range = domain.trim_range or (0.0, modes[0].vacuum_wavelength / 2.0)
    lam_half = modes[0].vacuum_wavelength / 2.0
    solutions, sweeps = [], {}
    for order in _branch_orders(ev, (d0, d1), window):
        br = follow_double_resonance(geom, model, order, d_grid, window, modes, trim_range)
        if br.d.size < 2:
            continue
        sweeps[order] = br
        p = br.pump_residual
        contiguous = np.diff(br.d) < 1.5 * (d_grid[1] - d_grid[0])
        crossing = (np.sign(p[:-1]) != np.sign(p[1:])) & (np.abs(p[1:] - p[:-1]) < 0.5) & contiguous
        for k in np.flatnonzero(crossing):
            frac = p[k] / (p[k] - p[k + 1])
            x0 = (
                br.temperature[k] + frac * (br.temperature[k + 1] - br.temperature[k]),
                br.d[k] + frac * (br.d[k + 1] - br.d[k]),
                br.trim[k],
            )
            x = solve_operating_point(geom, model, x0, modes=modes, tolerance=domain.tolerance,
                                      max_iterations=domain.max_iterations)
            if not (d0 <= x[1] <= d1 and window[0] <= x[0] <= window[1]):
                continue
            # half-wave trim shifts keep all three modes resonant
            x[2] = trim_range[0] + np.mod(x[2] - trim_range[0], lam_half)
            residual = ResonanceResidual(*(float(v) for v in _wrap(ev.all_cycles(*x))))
            if residual.max_abs() >= domain.tolerance:
                continue
            solutions.append(
                ResonanceSolution(float(x[0]), float(x[1]), float(x[2]), _mode_numbers(ev, x), residual,
                                  "triple", t_pm, order)
            )
    if not solutions:
        raise ResonanceSearchError(
            "pump detuning has no zero crossing within the d range",
            {
                "temperature_window_c": list(window),
                "pump_residual_sweeps": {
                    int(k): {"d_m": b.d.tolist(), "pump_residual": b.pump_residual.tolist()} for k, b in sweeps.items()
                },
            },
        )
    solutions.sort(key=lambda s: (round(s.wedge_offset, 12), abs(s.temperature - t_ref)))
    return solutions


def solve_triple_resonance(geom, model, domain=None, modes=None):
    """Triple resonance with the smallest non-negative wedge offset."""
    return find_triple_resonances(geom, model, domain, modes)[0]


def offset_operating_point(geom, model, x0, targets, modes=None, tolerance=1e-8):
    """Operating point with prescribed detunings, e.g. pump anti-resonant (0, 0, -0.5)."""
    modes = _modes(modes)
    x = solve_operating_point(geom, model, x0, targets, modes, tolerance)
    return tuple(float(v) for v in x)
