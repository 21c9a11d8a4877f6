"""
Shared fixtures: case-study cluster and single-building cluster.
"""
import json
from pathlib import Path

import numpy as np
import pytest

from config import HubConfig, UnitEntry
from flexhub.core.hub import CommunicationHub
from flexhub.env.flex_env import FlexEnv
from flexhub.units.weather import WeatherLibrary, day_start

TEST_DAY = "2024-07-20"

CASE_STUDY_UNITS = [
    {"unit_type": "small_office", "name": "small_A", "schedule": "lunch_dip"},
    {"unit_type": "small_office", "name": "small_B", "schedule": "constant"},
    {"unit_type": "medium_office", "name": "medium_A", "schedule": "lunch_dip"},
    {"unit_type": "medium_office", "name": "medium_B", "schedule": "constant"},
]


def hub_config(units=None, **kwargs) -> HubConfig:
    entries = [UnitEntry(**u) for u in (units or CASE_STUDY_UNITS)]
    return HubConfig(units=entries, **kwargs)


def rbc_setpoints(hub: CommunicationHub):
    """Physical baseline setpoints, one list per unit."""
    result = []
    for _, meta in hub.layout:
        result.append([15.0 if "Supply Air" in v.name else 25.0 for v in meta.inputs])
    return result


def run_rbc_day(hub: CommunicationHub, day: str = TEST_DAY):
    """Drive the hub for one day with baseline setpoints; returns the raw vectors."""
    raws = [hub.reset(day)]
    actions = rbc_setpoints(hub)
    for k in range(hub.axis.n_steps):
        hub.apply_actions(actions, k)
        hub.step_all()
        raws.append(hub.collect_outputs(k + 1))
    return raws


def write_experiment(path: Path, document: dict) -> Path:
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def weather():
    return WeatherLibrary.case_study(96)


@pytest.fixture
def case_study_config():
    return hub_config()


@pytest.fixture
def case_study_hub(case_study_config, weather):
    hub = CommunicationHub.from_config(case_study_config, weather)
    yield hub
    hub.close()


@pytest.fixture
def case_study_env(case_study_hub, case_study_config):
    env = FlexEnv(case_study_hub, training_days=[d.isoformat() for d in case_study_config.training_days])
    yield env
    env.close()


@pytest.fixture
def single_office_env(weather):
    cfg = hub_config([{"unit_type": "small_office", "name": "solo"}])
    hub = CommunicationHub.from_config(cfg, weather)
    env = FlexEnv(hub, training_days=[d.isoformat() for d in cfg.training_days])
    yield env
    env.close()


@pytest.fixture
def test_day_start():
    return day_start(TEST_DAY)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
