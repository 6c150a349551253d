"""Parameter study: intracavity loss, squeezing calibration and pump thresholds.

Prints one JSON document. The squeezing numbers are calibration experiments:
the analysis frequency that yields the target level on the low-loss cavity
is solved for, and the higher-loss cavity is evaluated at the same point.
"""

import argparse
import json

import numpy as np

from nopa.cavity import escape_efficiency, finesse
from nopa.config import RunConfig, load_config
from nopa.quantum import (
    correlation_variance,
    gain_to_pump_ratio,
    infer_pump_loss,
    pump_buildup,
    to_dB,
)


def level_dB(ratio, w, eta_det, T, L):
    # w = 2 pi f / kappa; kappa fixed at 2 pi so f = w
    return float(to_dB(correlation_variance(ratio, 1.0, w, 2 * np.pi, eta_det, escape_efficiency(T, L))))


def calibrate_frequency(target_dB, ratio, eta_det, T, L):
    """Normalized frequency 2 pi f / kappa at which the correlated level reaches ``target_dB``."""
    lo, hi = 0.0, 50.0
    if level_dB(ratio, lo, eta_det, T, L) > target_dB:
        return None  # target deeper than the f = 0 limit
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if level_dB(ratio, mid, eta_det, T, L) < target_dB else (lo, mid)
    return 0.5 * (lo + hi)


def loss_study(cfg, losses, target_dB, ratios, eta_det):
    T = cfg.geometry.output_T_subharmonic
    rows = []
    for L in losses:
        rows.append({
            "loss": L,
            "finesse": finesse(T, L),
            "escape_efficiency": escape_efficiency(T, L),
            "threshold_scale": ((T + L) / (T + losses[-1])) ** 2,
            "f0_level_dB": {str(r): level_dB(r, 0.0, eta_det, T, L) for r in ratios},
        })
    calib = []
    for r in ratios:
        w = calibrate_frequency(target_dB, r, eta_det, T, losses[-1])
        if w is None:
            continue
        calib.append({
            "pump_ratio": r,
            "omega_over_kappa": w,
            "levels_dB": {str(L): level_dB(r, w, eta_det, T, L) for L in losses},
        })
    return {"output_T": T, "eta_det": eta_det, "target_dB": target_dB, "by_loss": rows, "calibration": calib}


def threshold_study(cfg, ratio):
    g = cfg.geometry
    L0 = infer_pump_loss(ratio, g.front_T_pump)
    resonant = cfg.resonant_threshold()
    return {
        "resonant_W": resonant,
        "inferred_pump_loss": L0,
        "configured_pump_loss": g.loss_pump,
        "buildup": pump_buildup(g.front_T_pump, L0),
        "nonresonant_W": resonant * pump_buildup(g.front_T_pump, L0),
        "chi_per_sqrt_W": cfg.chi(),
    }


def gain_point(cfg, gain):
    x = gain_to_pump_ratio(gain)
    det = cfg.detection()
    kappa = cfg.kappa()
    f = cfg.quantum.analysis_frequency
    anti = correlation_variance(x, 1.0, np.array([0.0, f]), kappa, det.eta_det, det.eta_esc, branch="anticorrelated")
    return {"gain": gain, "pump_ratio": x, "pump_W": x * cfg.resonant_threshold(),
            "anticorrelated_dB": {"f0": float(to_dB(anti[0])), "analysis_f": float(to_dB(anti[1]))}}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--losses", type=float, nargs="+", default=[0.023, 0.003])
    p.add_argument("--target-db", type=float, default=-9.0)
    p.add_argument("--ratios", type=float, nargs="+", default=[0.25, 0.5, 0.75, 0.9])
    p.add_argument("--eta-det", type=float, default=1.0, help="detection efficiency for the ideal-condition study")
    p.add_argument("--threshold-ratio", type=float, default=12.5)
    p.add_argument("--gain", type=float, default=30.0)
    args = p.parse_args(argv)
    cfg = load_config(args.config) if args.config else RunConfig()
    doc = {
        "loss": loss_study(cfg, args.losses, args.target_db, args.ratios, args.eta_det),
        "threshold": threshold_study(cfg, args.threshold_ratio),
        "gain_point": gain_point(cfg, args.gain),
    }
    print(json.dumps(doc, indent=2))


if __name__ == "__main__":
    main()
