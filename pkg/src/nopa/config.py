"""Run configuration: one JSON document describing device, quantum point, measurement and solver."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .cavity import CoatingSpec, NopaGeometry, WedgedCrystal, cavity_mode_params, decay_rate, KAPPA_CONVENTIONS
from .errors import ConfigError, NopaError
from .material import default_modes, load_dispersion, validate_modes
from .measurement import WAVEFORM_SHAPES, NoiseTraceConfig, ScanWaveform
from .quantum import DetectionChain, PumpConfig, fit_chi, threshold_power
from .resonance import SearchDomain

FORMAT_VERSION = 1


@dataclass
class ModesConfig:
    wavelength: float = 1080e-9
    signal_axis: str = "y"
    idler_axis: str = "z"
    pump_axis: str = "y"


@dataclass
class GeometryConfig:
    crystal_length: float = 0.010
    aperture: tuple = (0.003, 0.003)
    wedge_angle_deg: float = 1.0
    air_gap: float = 0.044
    mirror_radius: float = 0.050
    front_T_subharmonic: float = 0.0
    front_T_pump: float = 0.20
    output_T_subharmonic: float = 0.125
    output_T_pump: float = 0.0
    loss_subharmonic: float = 0.003
    loss_pump: float = 0.053


@dataclass
class QuantumConfig:
    pump_power: float = 0.075
    threshold: float | None = 0.150  # measured; chi is fitted from it when chi is null
    chi: float | None = None
    eta_det: float = 0.95
    kappa_convention: str = "amplitude"
    analysis_frequency: float = 2e6


@dataclass
class MeasurementConfig:
    rbw: float = 10e3
    vbw: float = 100.0
    duration: float = 1.0
    sample_rate: float = 1000.0
    enl_dB: float = -15.0
    noise_seed: int = 20240607
    jitter_rad: float | None = None  # null: calibrate to jitter_target_dB
    jitter_target_dB: float = 8.40
    scan_seed: int = 1
    scan_shape: str = "triangle"
    scan_fsr: float = 1.2  # sweep amplitude in subharmonic FSR
    scan_period: float = 0.02
    scan_samples: int = 4000
    scan_noise: float = 0.0


@dataclass
class SolverConfig:
    temperature_range: tuple = (20.0, 120.0)
    d_range: tuple = (0.0, 3e-3)
    temperature_step: float = 0.05
    d_step: float = 2e-6
    tolerance: float = 1e-8
    max_iterations: int = 50


@dataclass
class RunConfig:
    dispersion: str | None = None  # null: packaged default coefficients
    modes: ModesConfig = field(default_factory=ModesConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    quantum: QuantumConfig = field(default_factory=QuantumConfig)
    measurement: MeasurementConfig = field(default_factory=MeasurementConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    base_dir: str | None = None  # directory used to resolve a relative dispersion path

    # -- derived objects -----------------------------------------------------

    def dispersion_model(self):
        path = self.dispersion
        if path is not None and self.base_dir is not None and not Path(path).is_absolute():
            local = Path(self.base_dir) / path
            if local.exists():
                path = local
        try:
            return load_dispersion(path)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("dispersion", f"cannot read coefficient file: {exc}") from exc
        except (NopaError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError("dispersion", str(exc)) from exc

    def optical_modes(self):
        m = self.modes
        return default_modes(m.wavelength, m.signal_axis, m.idler_axis, m.pump_axis)

    def nopa_geometry(self):
        g = self.geometry
        lam = self.modes.wavelength
        crystal = WedgedCrystal(
            length=g.crystal_length,
            aperture=tuple(g.aperture),
            wedge_angle=float(np.deg2rad(g.wedge_angle_deg)),
            front_coating=CoatingSpec({lam: g.front_T_subharmonic, lam / 2: g.front_T_pump}),
        )
        return NopaGeometry(
            crystal=crystal,
            air_gap=g.air_gap,
            mirror_radius=g.mirror_radius,
            output_coupler=CoatingSpec({lam: g.output_T_subharmonic, lam / 2: g.output_T_pump}),
            loss_subharmonic=g.loss_subharmonic,
            loss_pump=g.loss_pump,
        )

    def search_domain(self):
        s = self.solver
        return SearchDomain(
            temperature_range=tuple(s.temperature_range),
            d_range=tuple(s.d_range),
            temperature_step=s.temperature_step,
            d_step=s.d_step,
            tolerance=s.tolerance,
            max_iterations=s.max_iterations,
        )

    def chi(self):
        """Nonlinear coefficient, fitted from the measured threshold when not given."""
        q, g = self.quantum, self.geometry
        if q.chi is not None:
            return q.chi
        return float(fit_chi(q.threshold, g.front_T_pump, g.loss_pump, g.output_T_subharmonic, g.loss_subharmonic))

    def resonant_threshold(self):
        q, g = self.quantum, self.geometry
        if q.chi is None:
            return q.threshold
        return threshold_power(g.front_T_pump, g.loss_pump, g.output_T_subharmonic, g.loss_subharmonic, q.chi)

    def pump(self):
        return PumpConfig(self.quantum.pump_power, self.resonant_threshold(), self.chi())

    def detection(self):
        g = self.geometry
        eta_esc = g.output_T_subharmonic / (g.output_T_subharmonic + g.front_T_subharmonic + g.loss_subharmonic)
        return DetectionChain(self.quantum.eta_det, eta_esc)

    def kappa(self, model=None, temperature=None):
        """Signal-mode decay rate at ``temperature`` (default: mid solver range), d = 0."""
        model = self.dispersion_model() if model is None else model
        if temperature is None:
            temperature = 0.5 * sum(self.solver.temperature_range)
        params = cavity_mode_params(self.nopa_geometry(), self.optical_modes()[0], model, temperature)
        return decay_rate(params, self.quantum.kappa_convention)

    def scan_waveform(self):
        m = self.measurement
        return ScanWaveform(m.scan_shape, m.scan_fsr * self.modes.wavelength / 2.0, m.scan_period, m.scan_samples)

    def noise_config(self, level_dB, seed_offset=0):
        m = self.measurement
        return NoiseTraceConfig(level_dB, m.rbw, m.vbw, m.duration, m.sample_rate, m.enl_dB, m.noise_seed + seed_offset)

    def to_dict(self):
        d = {"format_version": FORMAT_VERSION}
        d.update(asdict(self))
        d.pop("base_dir")
        return d


_BLOCKS = {
    "modes": ModesConfig,
    "geometry": GeometryConfig,
    "quantum": QuantumConfig,
    "measurement": MeasurementConfig,
    "solver": SolverConfig,
}


def _positive(name, value):
    if not value > 0:
        raise ConfigError(name, f"must be positive, got {value}")


def _fraction(name, value, upper=1.0):
    if not 0.0 <= value < upper:
        raise ConfigError(name, f"must lie in [0, {upper}), got {value}")


def _check_types(block, obj):
    for f in fields(obj):
        v = getattr(obj, f.name)
        name = f"{block}.{f.name}"
        if isinstance(v, bool):
            raise ConfigError(name, "boolean where a number or string is expected")
        if isinstance(v, list):
            setattr(obj, f.name, tuple(v))
            v = tuple(v)
        if isinstance(v, tuple):
            if len(v) != 2 or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
                raise ConfigError(name, "expected a pair of numbers")
        elif f.name.endswith("_axis") or f.name in ("kappa_convention", "scan_shape"):
            if not isinstance(v, str):
                raise ConfigError(name, "expected a string")
        elif f.name.endswith("seed") or f.name in ("scan_samples", "max_iterations"):
            if not isinstance(v, int):
                raise ConfigError(name, "expected an integer")
        elif v is not None and not isinstance(v, (int, float)):
            raise ConfigError(name, f"expected a number, got {type(v).__name__}")


def validate(cfg):
    """Check every physical constraint before any computation runs."""
    for block in _BLOCKS:
        _check_types(block, getattr(cfg, block))
    m, g, q, ms, s = cfg.modes, cfg.geometry, cfg.quantum, cfg.measurement, cfg.solver

    _positive("modes.wavelength", m.wavelength)
    try:
        validate_modes(cfg.optical_modes())
    except (NopaError, ValueError) as exc:
        raise ConfigError("modes", str(exc)) from exc

    for name in ("crystal_length", "air_gap", "mirror_radius"):
        _positive(f"geometry.{name}", getattr(g, name))
    for i, a in enumerate(g.aperture):
        _positive(f"geometry.aperture[{i}]", a)
    if not 0.0 <= g.wedge_angle_deg < 5.0:
        raise ConfigError("geometry.wedge_angle_deg", f"must lie in [0, 5) deg, got {g.wedge_angle_deg}")
    for name in ("front_T_subharmonic", "front_T_pump", "output_T_subharmonic", "output_T_pump"):
        _fraction(f"geometry.{name}", getattr(g, name))
    _fraction("geometry.loss_subharmonic", g.loss_subharmonic, 0.2)
    _fraction("geometry.loss_pump", g.loss_pump, 0.2)
    if g.output_T_subharmonic <= 0:
        raise ConfigError("geometry.output_T_subharmonic", "output coupling must be positive")
    if g.front_T_pump <= 0:
        raise ConfigError("geometry.front_T_pump", "pump input coupling must be positive")

    if q.pump_power < 0:
        raise ConfigError("quantum.pump_power", f"must be non-negative, got {q.pump_power}")
    if q.chi is None and q.threshold is None:
        raise ConfigError("quantum.chi", "either chi or a measured threshold is required")
    if q.chi is not None:
        _positive("quantum.chi", q.chi)
    if q.threshold is not None:
        _positive("quantum.threshold", q.threshold)
    if not 0.0 < q.eta_det <= 1.0:
        raise ConfigError("quantum.eta_det", f"must lie in (0, 1], got {q.eta_det}")
    if q.kappa_convention not in KAPPA_CONVENTIONS:
        raise ConfigError("quantum.kappa_convention", f"must be one of {KAPPA_CONVENTIONS}")
    if q.analysis_frequency < 0:
        raise ConfigError("quantum.analysis_frequency", "must be non-negative")
    if q.pump_power >= cfg.resonant_threshold():
        raise ConfigError("quantum.pump_power", "must stay below the oscillation threshold")

    for name in ("rbw", "vbw", "duration", "sample_rate", "scan_period", "scan_fsr"):
        _positive(f"measurement.{name}", getattr(ms, name))
    if not ms.vbw < ms.rbw:
        raise ConfigError("measurement.vbw", "video bandwidth must be below the resolution bandwidth")
    if round(ms.duration * ms.sample_rate) < 100:
        raise ConfigError("measurement.duration", "duration * sample_rate must give at least 100 points")
    if ms.jitter_rad is not None and not 0.0 <= ms.jitter_rad <= np.pi / 4:
        raise ConfigError("measurement.jitter_rad", "must lie in [0, pi/4]")
    if ms.scan_shape not in WAVEFORM_SHAPES:
        raise ConfigError("measurement.scan_shape", f"must be one of {WAVEFORM_SHAPES}")
    if ms.scan_fsr < 1.0:
        raise ConfigError("measurement.scan_fsr", "scan must cover at least one free spectral range")
    if ms.scan_samples < 4:
        raise ConfigError("measurement.scan_samples", "need at least 4 samples")
    if ms.scan_noise < 0:
        raise ConfigError("measurement.scan_noise", "must be non-negative")

    for name in ("temperature_range", "d_range"):
        lo, hi = getattr(s, name)
        if not hi > lo:
            raise ConfigError(f"solver.{name}", "upper bound must exceed lower bound")
    for name in ("temperature_step", "d_step", "tolerance"):
        _positive(f"solver.{name}", getattr(s, name))
    _positive("solver.max_iterations", s.max_iterations)

    try:
        cfg.nopa_geometry()
    except (NopaError, ValueError) as exc:
        raise ConfigError("geometry", str(exc)) from exc
    return cfg


def config_from_dict(data, base_dir=None):
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError("format_version", f"unsupported version {version!r}")
    known = set(_BLOCKS) | {"dispersion", "format_version"}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown configuration key")
    blocks = {}
    for name, cls in _BLOCKS.items():
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(name, "expected an object")
        allowed = {f.name for f in fields(cls)}
        for key in raw:
            if key not in allowed:
                raise ConfigError(f"{name}.{key}", "unknown configuration key")
        blocks[name] = cls(**raw)
    dispersion = data.get("dispersion")
    if dispersion is not None and not isinstance(dispersion, str):
        raise ConfigError("dispersion", "expected a file path or null")
    cfg = RunConfig(dispersion=dispersion, base_dir=base_dir, **blocks)
    return validate(cfg)


def load_config(path=None):
    """Read and validate a JSON run configuration; ``None`` gives the defaults."""
    if path is None:
        return validate(RunConfig())
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {p}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(data, base_dir=str(p.parent))
