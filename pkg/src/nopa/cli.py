"""nopa command line: design | spectrum | threshold | scan | noise.

Every command reads one JSON device description (``--config``; defaults when
omitted) and writes CSV (traces, spectra) or JSON (scalar results) to stdout
or ``--out``. Exit codes: 0 success, 1 configuration or usage error, 2 model
error or no solution.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import measurement, quantum, resonance
from .config import FORMAT_VERSION, load_config
from .errors import ConfigError, NopaError

EXIT_OK, EXIT_CONFIG, EXIT_MODEL = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(value):
    return format(float(value), ".9g")


def write_csv(stream, command, columns, rows, meta=None):
    stream.write(f"# format_version: {FORMAT_VERSION}\n")
    stream.write(f"# command: {command}\n")
    for key, value in (meta or {}).items():
        stream.write(f"# {key}: {value}\n")
    stream.write(",".join(columns) + "\n")
    for row in zip(*rows):
        stream.write(",".join(fmt(v) for v in row) + "\n")


def write_json(stream, command, payload):
    doc = {"format_version": FORMAT_VERSION, "command": command}
    doc.update(payload)
    stream.write(json.dumps(doc, indent=2) + "\n")


# -- commands ----------------------------------------------------------------

def run_design(cfg, args, out):
    model = cfg.dispersion_model()
    geom, modes, domain = cfg.nopa_geometry(), cfg.optical_modes(), cfg.search_domain()
    double = resonance.solve_double_resonance(geom, model, domain, modes)
    solutions = resonance.find_triple_resonances(geom, model, domain, modes)
    best = solutions[0]
    period = resonance.triple_resonance_period(model, modes, geom, best.temperature, best.wedge_offset)
    write_json(out, "design", {
        "dispersion": model.source,
        "double_resonance": double.as_dict(),
        "triple_resonance": best.as_dict(),
        "triple_solutions_found": len(solutions),
        "triple_period_m": period,
        "max_abs_residual": best.residual.max_abs(),
    })


def _frequency_grid(args):
    if not (args.fmin > 0 and args.fmax > args.fmin and args.points >= 1):
        raise UsageError(f"need 0 < fmin < fmax and points >= 1 (got {args.fmin}, {args.fmax}, {args.points})")
    if args.points == 1:
        return np.array([args.fmin])
    if args.log:
        return np.geomspace(args.fmin, args.fmax, args.points)
    return np.linspace(args.fmin, args.fmax, args.points)


def run_spectrum(cfg, args, out):
    f = _frequency_grid(args)
    kappa = cfg.kappa()
    spec = quantum.variance_spectrum(cfg.pump(), kappa, cfg.detection(), f)
    write_csv(
        out, "spectrum",
        ["f_hz", "x_sum", "x_diff", "y_sum", "y_diff", "corr_db"],
        [spec.frequency, spec.x_sum, spec.x_diff, spec.y_sum, spec.y_diff, spec.correlation_dB],
        {"kappa_rad_s": fmt(kappa), "kappa_convention": cfg.quantum.kappa_convention,
         "pump_ratio": fmt(cfg.pump().ratio)},
    )


def threshold_summary(cfg, ratio=None):
    g = cfg.geometry
    loss_pump = g.loss_pump if ratio is None else quantum.infer_pump_loss(ratio, g.front_T_pump)
    resonant = cfg.resonant_threshold()
    buildup = quantum.pump_buildup(g.front_T_pump, loss_pump)
    return {
        "P_thr_resonant_W": resonant,
        "P_thr_nonresonant_W": resonant * buildup,
        "buildup": buildup,
        "ratio": buildup,
        "chi_per_sqrt_W": cfg.chi(),
        "pump_loss_L0": loss_pump,
    }


def run_threshold(cfg, args, out):
    summary = threshold_summary(cfg, args.ratio)
    key = "P_thr_resonant_W" if args.mode == "resonant" else "P_thr_nonresonant_W"
    write_json(out, "threshold", {"mode": args.mode, "P_thr_W": summary[key], **summary})


def scan_trace(cfg, stage):
    model = cfg.dispersion_model()
    geom, modes, domain = cfg.nopa_geometry(), cfg.optical_modes(), cfg.search_domain()
    triple = resonance.solve_triple_resonance(geom, model, domain, modes)
    x = measurement.stage_operating_point(geom, model, stage, triple, domain, modes)
    trace = measurement.simulate_cavity_scan(
        geom, model, x[0], x[1], cfg.pump(), cfg.scan_waveform(), cfg.measurement.scan_seed,
        center_trim=x[2], noise_std=cfg.measurement.scan_noise, modes=modes,
    )
    return x, trace


def run_scan(cfg, args, out):
    x, trace = scan_trace(cfg, args.stage)
    write_csv(
        out, "scan",
        ["time_s", "trim_m", "pump", "subharmonic", "signal", "idler"],
        [trace.time, trace.trim, trace.pump_transmission, trace.subharmonic_transmission,
         trace.signal_transmission, trace.idler_transmission],
        {"stage": args.stage, "temperature_c": fmt(x[0]), "wedge_offset_m": fmt(x[1]),
         "center_trim_m": fmt(x[2]), "gain": fmt(quantum.parametric_gain(cfg.pump().pump_power, cfg.pump().threshold))},
    )


_QUADRATURE_OFFSET = {"x": 0, "y": 1}


def noise_levels(cfg, quadrature):
    """(correlated, anticorrelated) variances at the analysis frequency after phase jitter, and sigma."""
    q = cfg.quantum
    pump, det = cfg.pump(), cfg.detection()
    kappa = cfg.kappa()
    args = (pump.pump_power, pump.threshold, q.analysis_frequency, kappa, det.eta_det, det.eta_esc)
    corr = quantum.correlation_variance(*args, branch=quantum.CORRELATED)
    anti = quantum.correlation_variance(*args, branch=quantum.ANTICORRELATED)
    sigma = cfg.measurement.jitter_rad
    if sigma is None:
        target = float(quantum.from_dB(-cfg.measurement.jitter_target_dB))
        sigma = measurement.calibrate_phase_jitter(corr, anti, target) if corr < target else 0.0
    v = measurement.apply_phase_jitter(quantum.QuadratureVariances.from_branches(corr, anti), sigma)
    if quadrature == "x":
        return v.x_sum, v.x_diff, sigma
    return v.y_diff, v.y_sum, sigma


def noise_traces(cfg, quadrature):
    corr, anti, sigma = noise_levels(cfg, quadrature)
    levels = [float(quantum.to_dB(corr)), float(quantum.to_dB(anti))]
    # distinct streams per quadrature; within one run all four traces share a stream
    config = cfg.noise_config(levels[0], seed_offset=_QUADRATURE_OFFSET[quadrature])
    t, snl, (c, a), enl = measurement.simulate_level_traces(config, levels)
    estimates = {
        "correlated": measurement.estimate_dB_from_trace(c, snl).as_dict(),
        "anticorrelated": measurement.estimate_dB_from_trace(a, snl).as_dict(),
        "enl": measurement.estimate_dB_from_trace(enl, snl).as_dict(),
    }
    report = {
        "quadrature": quadrature,
        "set_levels_dB": {"correlated": levels[0], "anticorrelated": levels[1], "enl": config.enl_dB},
        "jitter_rad": sigma,
        "averages": config.averages,
        "estimates": estimates,
    }
    return (t, snl, c, a, enl), report


def run_noise(cfg, args, out):
    (t, snl, c, a, enl), report = noise_traces(cfg, args.quadrature)
    write_csv(
        out, "noise",
        ["time_s", "snl_db", "correlated_db", "anticorrelated_db", "enl_db"],
        [t, snl, c, a, enl],
        {"quadrature": args.quadrature, "rbw_hz": fmt(cfg.measurement.rbw), "vbw_hz": fmt(cfg.measurement.vbw)},
    )
    sys.stderr.write(json.dumps({"format_version": FORMAT_VERSION, **report}) + "\n")


COMMANDS = {
    "design": run_design,
    "spectrum": run_spectrum,
    "threshold": run_threshold,
    "scan": run_scan,
    "noise": run_noise,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="nopa", description="Triply resonant NOPA design and measurement simulation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON run configuration (defaults when omitted)")
        p.add_argument("--out", help="output file (default: stdout)")
        return p

    add("design", "solve double then triple resonance, JSON result")
    p = add("spectrum", "quadrature variance spectrum, CSV")
    p.add_argument("--fmin", type=float, default=0.1e6)
    p.add_argument("--fmax", type=float, default=50e6)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--log", action="store_true", help="logarithmic frequency grid")
    p = add("threshold", "resonant and non-resonant oscillation thresholds, JSON")
    p.add_argument("--mode", choices=("resonant", "nonresonant"), default="resonant")
    p.add_argument("--ratio", type=float, help="infer the pump loss from this non-resonant/resonant ratio")
    p = add("scan", "cavity-length scan trace, CSV")
    p.add_argument("--stage", choices=("single", "double", "triple"), default="triple")
    p = add("noise", "spectrum-analyzer noise traces, CSV; level estimate JSON on stderr")
    p.add_argument("--quadrature", choices=("x", "y"), default="x")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    buf = io.StringIO()
    try:
        cfg = load_config(args.config)
        COMMANDS[args.command](cfg, args, buf)
    except (ConfigError, UsageError) as exc:
        sys.stderr.write(f"nopa {args.command}: configuration error: {exc}\n")
        return EXIT_CONFIG
    except NopaError as exc:
        sys.stderr.write(f"nopa {args.command}: {type(exc).__name__}: {exc}\n")
        return EXIT_MODEL
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
