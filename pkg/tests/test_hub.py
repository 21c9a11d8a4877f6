import logging
import time

import numpy as np
import pytest

from config import UnitEntry
from flexhub.core.hub import CommunicationHub, TimeAxis, allocate_indices, build_unit
from flexhub.exceptions import ConfigError, EpisodeDoneError, ShapeError, UnitDesyncError, UnitStepError

from conftest import TEST_DAY, hub_config, rbc_setpoints, run_rbc_day


def test_case_study_layout(case_study_hub):
    indices = [slot.index for slot in case_study_hub.slots]
    names = [slot.name for slot in case_study_hub.slots]
    assert indices == ["fmu_1", "fmu_2", "fmu_3", "fmu_4"]
    assert names == ["small_A", "small_B", "medium_A", "medium_B"]
    assert case_study_hub.raw_size == 64
    assert case_study_hub.input_sizes == [6, 6, 6, 6]


def test_count_expands_names():
    cfg = hub_config([
        {"unit_type": "small_office", "name": "shop", "count": 2},
        {"unit_type": "medium_office"},
    ])
    slots = allocate_indices(cfg)
    assert [(s.index, s.name) for s in slots] == [
        ("fmu_1", "shop_1"), ("fmu_2", "shop_2"), ("fmu_3", "medium_office"),
    ]
    assert [s.entry_position for s in slots] == [0, 0, 1]


def test_time_axis():
    axis = TimeAxis.for_day(TEST_DAY, 900.0)
    assert axis.n_steps == 96
    assert axis.time_at(4) - axis.t0 == 3600.0
    assert axis.hour_at(95) == pytest.approx(23.75)


def test_reset_returns_initial_outputs(case_study_hub):
    raw = case_study_hub.reset(TEST_DAY)
    assert raw.shape == (64,)
    # site dry-bulb is the first output of every unit
    first = [0, 13, 26, 45]
    assert len({raw[i] for i in first}) == 1
    np.testing.assert_array_equal(case_study_hub.record.tables[0].initial_outputs, raw[:13])


def test_use_before_reset(case_study_hub):
    with pytest.raises(UnitDesyncError):
        case_study_hub.collect_outputs(0)


def test_collect_at_wrong_step(case_study_hub):
    case_study_hub.reset(TEST_DAY)
    with pytest.raises(UnitDesyncError):
        case_study_hub.collect_outputs(1)


def test_clock_drift_detected(case_study_hub):
    case_study_hub.reset(TEST_DAY)
    unit = case_study_hub.units[2]
    unit.do_step(unit.time, 900.0)
    with pytest.raises(UnitDesyncError, match="fmu_3"):
        case_study_hub.collect_outputs(0)


def test_apply_actions_shape_errors(case_study_hub):
    case_study_hub.reset(TEST_DAY)
    actions = rbc_setpoints(case_study_hub)
    with pytest.raises(ShapeError):
        case_study_hub.apply_actions(actions[:3], 0)
    actions[1] = actions[1][:5]
    with pytest.raises(ShapeError, match="fmu_2"):
        case_study_hub.apply_actions(actions, 0)


def test_step_after_end(case_study_hub):
    run_rbc_day(case_study_hub)
    with pytest.raises(EpisodeDoneError):
        case_study_hub.step_all()


def test_unit_failure_is_wrapped(case_study_hub, monkeypatch):
    case_study_hub.reset(TEST_DAY)

    def explode(current_time, step_size):
        raise RuntimeError("solver diverged")

    monkeypatch.setattr(case_study_hub.units[0], "do_step", explode)
    with pytest.raises(UnitStepError) as info:
        case_study_hub.step_all()
    assert info.value.index == "fmu_1"
    assert isinstance(info.value.cause, RuntimeError)


def test_clamped_inputs_are_logged(case_study_hub, caplog):
    case_study_hub.reset(TEST_DAY)
    actions = rbc_setpoints(case_study_hub)
    actions[0][0] = 9.0
    case_study_hub.apply_actions(actions, 0)
    with caplog.at_level(logging.WARNING, logger="flexhub.core.hub"):
        case_study_hub.step_all()
    assert any("fmu_1" in r.message and "clamped" in r.message for r in caplog.records)


def test_record_layout(case_study_hub):
    raws = run_rbc_day(case_study_hub)
    record = case_study_hub.record
    assert record.steps_recorded == 96
    for k in (0, 40, 95):
        np.testing.assert_array_equal(record.tables[0].outputs[k], raws[k + 1][:13])
        np.testing.assert_array_equal(record.tables[3].outputs[k], raws[k + 1][45:])
    np.testing.assert_array_equal(record.tables[2].inputs[10], [15.0, 15.0, 15.0, 25.0, 25.0, 25.0])


def test_parallel_stepping_matches_serial(weather):
    serial = CommunicationHub.from_config(hub_config(), weather)
    parallel = CommunicationHub.from_config(hub_config(sim={"parallel_workers": 4}), weather)
    with serial, parallel:
        a = run_rbc_day(serial)
        b = run_rbc_day(parallel)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_bad_zone_override_reports_path(weather):
    entry = UnitEntry(unit_type="small_office", overrides={"zones": {9: {"heat_capacitance": 1e6}}})
    with pytest.raises(ConfigError) as info:
        build_unit(entry, weather, 900.0, ("units", 0))
    assert info.value.path == "units.0.overrides.zones.9"


def test_invalid_override_value(weather):
    entry = UnitEntry(unit_type="medium_office", overrides={"zones": {1: {"heat_capacitance": -5.0}}})
    with pytest.raises(ConfigError, match="heat_capacitance"):
        build_unit(entry, weather, 900.0, ("units", 2))


def test_overrides_change_dynamics(weather):
    cfg = hub_config([
        {"unit_type": "small_office", "name": "base"},
        {"unit_type": "small_office", "name": "leaky",
         "overrides": {"zones": {1: {"envelope_resistance": 0.001}}}},
    ])
    with CommunicationHub.from_config(cfg, weather) as hub:
        raws = run_rbc_day(hub)
    assert not np.array_equal(raws[-1][:13], raws[-1][13:])


def test_grouped_io_per_unit_type(case_study_hub):
    io = case_study_hub.io
    assert io.input_names("small_office")[0] == "AHU Supply Air Temperature"
    assert len(io.output_names("medium_office")) == 19
    assert set(io.by_type) == {"small_office", "medium_office"}
    sat = io.by_type["small_office"].inputs[0]
    assert (sat.lower_bound, sat.upper_bound, sat.granularity) == (10.0, 15.0, 0.1)
    assert [v.granularity for v in io.by_type["medium_office"].inputs] == [0.1] * 6


def test_raw_vector_splits_back_into_units(case_study_hub):
    raw = run_rbc_day(case_study_hub)[-1]
    per_unit = case_study_hub.unit_outputs(raw)
    assert [len(u) for u in per_unit] == [13, 13, 19, 19]
    assert per_unit[0]["Zone 1 Indoor Air Temperature"] == raw[8]

    diagnostics = case_study_hub.diagnostics()
    assert list(diagnostics) == ["fmu_1", "fmu_2", "fmu_3", "fmu_4"]
    assert len(diagnostics["fmu_1"]) == 5
    table = case_study_hub.record.tables[0]
    assert table.diagnostic_names == list(diagnostics["fmu_1"])
    assert table.diagnostics[-1].tolist() == list(diagnostics["fmu_1"].values())
    for values in diagnostics.values():
        assert all(name.endswith("Flow Fraction") for name in values)
        assert all(0.0 <= v <= 1.0 for v in values.values())


def test_hub_without_units():
    with CommunicationHub([]) as hub:
        assert hub.layout == [] and hub.raw_size == 0
        raw = hub.reset(TEST_DAY)
        assert raw.shape == (0,)
        hub.apply_actions([], 0)
        hub.step_all()
        assert hub.current_step == 1
        assert hub.collect_outputs(1).shape == (0,)
        assert hub.diagnostics() == {}
        assert hub.record.tables == []


def _day_step_seconds(hub) -> float:
    hub.reset(TEST_DAY)
    actions = rbc_setpoints(hub)
    elapsed = 0.0
    for k in range(hub.axis.n_steps):
        hub.apply_actions(actions, k)
        started = time.perf_counter()
        hub.step_all()
        elapsed += time.perf_counter() - started
        hub.collect_outputs(k + 1)
    return elapsed


@pytest.mark.slow
def test_step_time_grows_linearly_with_units(weather):
    per_unit = {}
    for n in (1, 2, 4, 8, 16):
        with CommunicationHub.from_config(hub_config([{"unit_type": "small_office", "count": n}]), weather) as hub:
            per_unit[n] = min(_day_step_seconds(hub) for _ in range(3)) / n
    for n, seconds in per_unit.items():
        assert per_unit[1] / 3.0 <= seconds <= 3.0 * per_unit[1], per_unit
