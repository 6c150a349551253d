import json
from pathlib import Path

import pytest

from nopa.config import FORMAT_VERSION, RunConfig, config_from_dict, load_config
from nopa.errors import ConfigError

REPO = Path(__file__).resolve().parents[1]


def test_shipped_config_equals_defaults():
    cfg = load_config(REPO / "configs" / "default.json")
    d = cfg.to_dict()
    d.pop("dispersion")
    ref = RunConfig().to_dict()
    ref.pop("dispersion")
    assert json.loads(json.dumps(d)) == json.loads(json.dumps(ref))
    assert cfg.dispersion_model().source == RunConfig().dispersion_model().source


def test_default_device():
    cfg = load_config()
    g = cfg.nopa_geometry()
    assert g.total_length == pytest.approx(0.054)
    assert cfg.pump().ratio == pytest.approx(0.5)
    assert cfg.detection().eta_esc == pytest.approx(0.125 / 0.128)
    assert cfg.chi() == pytest.approx(0.0661, abs=1e-4)


def test_chi_given_sets_threshold():
    cfg = config_from_dict({"quantum": {"chi": 0.0661035631919087, "threshold": None}})
    assert cfg.resonant_threshold() == pytest.approx(0.150, rel=1e-9)


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"geometry": {"wedge_angle_deg": 7.0}}, "geometry.wedge_angle_deg"),
        ({"geometry": {"loss_pump": 0.5}}, "geometry.loss_pump"),
        ({"quantum": {"eta_det": 1.5}}, "quantum.eta_det"),
        ({"quantum": {"chi": None, "threshold": None}}, "quantum.chi"),
        ({"quantum": {"pump_power": 0.2}}, "quantum.pump_power"),
        ({"quantum": {"kappa_convention": "power"}}, "quantum.kappa_convention"),
        ({"measurement": {"vbw": 2e4}}, "measurement.vbw"),
        ({"measurement": {"duration": 0.01}}, "measurement.duration"),
        ({"measurement": {"noise_seed": 1.5}}, "measurement.noise_seed"),
        ({"solver": {"d_range": [1e-3, 0.0]}}, "solver.d_range"),
        ({"modes": {"idler_axis": "y"}}, "modes"),
        ({"geometry": {"colour": "red"}}, "geometry.colour"),
        ({"extras": {}}, "extras"),
        ({"format_version": 99}, "format_version"),
        ({"geometry": {"mirror_radius": 0.04}}, None),
    ],
)
def test_validation_names_field(patch, field):
    if field is None:
        # unstable resonator is a model problem, caught when the Gouy phase is needed
        cfg = config_from_dict(patch)
        assert cfg.geometry.mirror_radius == 0.04
        return
    with pytest.raises(ConfigError) as exc:
        config_from_dict(patch)
    assert exc.value.field == field


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{ not json")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert exc.value.field == "<file>"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_missing_dispersion_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"format_version": FORMAT_VERSION, "dispersion": "nowhere.json"}))
    cfg = load_config(p)
    with pytest.raises(ConfigError) as exc:
        cfg.dispersion_model()
    assert exc.value.field == "dispersion"
