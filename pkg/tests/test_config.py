import json
from datetime import date
from pathlib import Path

import pytest

from config import AppConfig, StorageConfig, load_experiment, parse_config, parse_experiment
from flexhub.exceptions import ConfigError

from conftest import CASE_STUDY_UNITS

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _hub(**kwargs):
    document = {"units": CASE_STUDY_UNITS}
    document.update(kwargs)
    return json.dumps(document)


def test_case_study_document():
    cfg = parse_config(_hub())
    assert [u.name for u in cfg.units] == ["small_A", "small_B", "medium_A", "medium_B"]
    assert cfg.sim.step_seconds == 900 and cfg.sim.steps_per_day == 96
    assert cfg.test_day == date(2024, 7, 20)
    assert cfg.training_days[0] == date(2024, 7, 8) and len(cfg.training_days) == 12
    assert cfg.storage.record and cfg.storage.export_csv


def test_step_must_divide_the_day():
    with pytest.raises(ConfigError) as info:
        parse_config(_hub(sim={"step_seconds": 700}))
    assert info.value.path == "sim.step_seconds"
    assert "86400" in str(info.value)


def test_empty_units():
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps({"units": []}))
    assert info.value.path == "units"


def test_unknown_key_is_rejected():
    units = [dict(CASE_STUDY_UNITS[0], colour="red")]
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps({"units": units}))
    assert info.value.path == "units.0.colour"


def test_unknown_unit_type():
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps({"units": [{"unit_type": "warehouse"}]}))
    assert info.value.path == "units.0.unit_type"


def test_duplicate_names():
    units = [{"unit_type": "small_office", "name": "shop", "count": 2}, {"unit_type": "small_office", "name": "shop_2"}]
    with pytest.raises(ConfigError, match="shop_2"):
        parse_config(json.dumps({"units": units}))


def test_malformed_json():
    with pytest.raises(ConfigError, match="malformed JSON at line 1"):
        parse_config('{"units": [')
    with pytest.raises(ConfigError, match="JSON object"):
        parse_config("[1, 2]")


def test_occupancy_override_validation():
    units = [{"unit_type": "small_office", "overrides": {"occupancy": [0.5] * 23}}]
    with pytest.raises(ConfigError, match="24 hourly values"):
        parse_config(json.dumps({"units": units}))


def test_experiment_defaults():
    cfg = parse_experiment(json.dumps({"hub": {"units": CASE_STUDY_UNITS}}))
    assert cfg.controller == "rbc"
    assert cfg.reward.p_max == 103500.0
    assert cfg.sac.gamma == 0.995 and cfg.sac.tau == 0.005
    assert cfg.action_mode == "box" and cfg.action_mapping == "relative_incremental"
    assert cfg.checkpoint_every == 0


def test_sac_needs_box_actions():
    document = {"hub": {"units": CASE_STUDY_UNITS}, "controller": "sac", "action_mode": "multidiscrete"}
    with pytest.raises(ConfigError, match="box"):
        parse_experiment(json.dumps(document))


def test_nested_sac_error_path():
    document = {"hub": {"units": CASE_STUDY_UNITS}, "sac": {"gamma": 1.5}}
    with pytest.raises(ConfigError) as info:
        parse_experiment(json.dumps(document))
    assert info.value.path == "sac.gamma"


def test_weather_profile_validation():
    document = {
        "hub": {"units": CASE_STUDY_UNITS},
        "weather": {"profiles": {"2024-08-01": {"peak_temp": 20.0, "min_temp": 25.0}}},
    }
    with pytest.raises(ConfigError, match="min_temp"):
        parse_experiment(json.dumps(document))


def test_shipped_configs_parse():
    case_study = load_experiment(CONFIG_DIR / "case_study.json")
    assert case_study.controller == "sac" and len(case_study.hub.units) == 4
    baseline = load_experiment(CONFIG_DIR / "rbc_baseline.json")
    assert sum(u.count for u in baseline.hub.units) == 4


def test_missing_experiment_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_experiment(tmp_path / "absent.json")


def test_process_settings():
    assert AppConfig(log_level="debug").log_level == "DEBUG"
    with pytest.raises(ValueError):
        AppConfig(log_level="loud")
    with pytest.raises(ValueError):
        StorageConfig(backend="redis")


def test_every_violation_is_reported():
    document = {"hub": {"units": CASE_STUDY_UNITS}, "sac": {"gamma": 1.5, "tau": 0.0}, "episodes": -1}
    with pytest.raises(ConfigError) as info:
        parse_experiment(json.dumps(document))
    paths = [path for path, _ in info.value.violations]
    assert {"sac.gamma", "sac.tau", "episodes"} <= set(paths)
    assert info.value.path == paths[0]
    for path in ("sac.gamma", "sac.tau", "episodes"):
        assert f"{path}: " in str(info.value)
