import pandas as pd

from flexhub.core.hub import CommunicationHub
from flexhub.core.record import REWARD_COLUMNS, export_csv

from conftest import CASE_STUDY_UNITS, hub_config, rbc_setpoints, run_rbc_day


def _export(weather, directory, units=None):
    with CommunicationHub.from_config(hub_config(units), weather) as hub:
        run_rbc_day(hub)
        return export_csv(hub.record, f"{directory}/")


def test_export_layout(weather, tmp_path):
    written = _export(weather, tmp_path)
    assert sorted(p.name for p in written) == ["fmu_1.csv", "fmu_2.csv", "fmu_3.csv", "fmu_4.csv", "rewards.csv"]

    frame = pd.read_csv(tmp_path / "fmu_1.csv")
    assert list(frame.columns[:3]) == ["step", "time", "fmu_1.AHU Supply Air Temperature"]
    assert len(frame.columns) == 2 + 6 + 13
    assert len(frame) == 96
    assert frame["time"].iloc[0] == "2024-07-20T00:15:00"
    assert frame["time"].iloc[-1] == "2024-07-21T00:00:00"

    medium = pd.read_csv(tmp_path / "fmu_3.csv")
    assert len(medium.columns) == 2 + 6 + 19
    assert "fmu_3.Floor 2 Indoor Air Temperature" in medium.columns

    rewards = pd.read_csv(tmp_path / "rewards.csv")
    assert list(rewards.columns) == REWARD_COLUMNS


def test_export_is_byte_identical_across_runs(weather, tmp_path):
    first = _export(weather, tmp_path / "a")
    second = _export(weather, tmp_path / "b")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()


def test_runs_in_one_process_are_isolated(weather, tmp_path):
    alone = _export(weather, tmp_path / "alone")

    # interleave a differently configured cluster with a fresh case-study run
    other = CommunicationHub.from_config(
        hub_config([{"unit_type": "medium_office", "count": 3, "schedule": "lunch_dip"}]), weather
    )
    main = CommunicationHub.from_config(hub_config(), weather)
    with other, main:
        other.reset("2024-07-15")
        main.reset("2024-07-20")
        for k in range(96):
            other.apply_actions(rbc_setpoints(other), k)
            other.step_all()
            other.collect_outputs(k + 1)
            main.apply_actions(rbc_setpoints(main), k)
            main.step_all()
            main.collect_outputs(k + 1)
        mixed = export_csv(main.record, f"{tmp_path / 'mixed'}/")

    for a, b in zip(alone, mixed):
        assert a.read_bytes() == b.read_bytes()


def test_series_matches_table(case_study_hub):
    run_rbc_day(case_study_hub)
    record = case_study_hub.record
    series = record.series(0, "Fan Electric Power")
    j = record.tables[0].output_names.index("Fan Electric Power")
    assert (series == record.tables[0].outputs[:, j]).all()


def test_fifth_unit_leaves_first_four_unchanged(weather, tmp_path):
    four = _export(weather, tmp_path / "four")
    five_units = CASE_STUDY_UNITS + [{"unit_type": "small_office", "name": "extra", "schedule": "lunch_dip"}]
    five = _export(weather, tmp_path / "five", five_units)
    assert len(five) == 6
    for a, b in zip(four[:4], five[:4]):
        assert a.name == b.name
        assert a.read_bytes() == b.read_bytes()
