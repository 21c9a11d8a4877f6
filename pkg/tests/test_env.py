import logging

import numpy as np
import pytest

from flexhub.agents.baseline import RbcConfig, RuleBasedController
from flexhub.env.flex_env import FlexEnv
from flexhub.exceptions import ConfigError, EpisodeDoneError

from conftest import TEST_DAY


def test_reset_is_repeatable(case_study_env):
    first, info = case_study_env.reset(seed=3, options={"day": TEST_DAY})
    second, _ = case_study_env.reset(seed=3, options={"day": TEST_DAY})
    np.testing.assert_array_equal(first, second)
    assert first.shape == (53,)
    assert first.dtype == np.float32
    assert info == {"day": TEST_DAY, "step": 0}


def test_reset_uses_baseline_setpoints(case_study_env):
    case_study_env.reset(options={"day": TEST_DAY})
    previous = case_study_env.mapper.state.previous
    kinds = [d.name for d in case_study_env.action_spec.dims]
    sat = np.array(["Supply Air" in name for name in kinds])
    assert sat.sum() == 8
    assert np.all(previous[sat] == 15.0)
    assert np.all(previous[~sat] == 25.0)


def test_episode_runs_96_steps(case_study_env):
    case_study_env.reset(options={"day": TEST_DAY})
    zero = np.zeros(24, dtype=np.float32)
    for k in range(1, 97):
        result = case_study_env.step(zero)
        assert result.info["step"] == k
        assert result.terminated == (k == 96)
        assert not result.truncated
        assert np.all((result.observation >= 0.0) & (result.observation <= 1.0))
        b = result.info["breakdown"]
        assert result.reward == pytest.approx(-(b.w_hvac + b.w_temp + b.w_peak), abs=1e-12)
    with pytest.raises(EpisodeDoneError):
        case_study_env.step(zero)
    assert len(case_study_env.hub.record.rewards) == 96


def test_zero_action_keeps_setpoints(case_study_env):
    case_study_env.reset(options={"day": TEST_DAY})
    case_study_env.step(np.full(24, 0.6))
    before = [list(v) for v in case_study_env.step(np.full(24, -0.3)).info["setpoints"]]
    after = case_study_env.step(np.zeros(24)).info["setpoints"]
    assert after == before


def test_reward_hour_is_interval_start(case_study_env):
    case_study_env.reset(options={"day": TEST_DAY})
    for _ in range(33):
        case_study_env.step(np.zeros(24))
    rows = case_study_env.hub.record.rewards
    assert rows[0]["hour"] == 0.0
    assert rows[32]["hour"] == 8.0
    assert rows[32]["step"] == 33


def test_step_before_reset(case_study_env):
    with pytest.raises(EpisodeDoneError):
        case_study_env.step(np.zeros(24))


def test_training_days_round_robin(case_study_env):
    days = [case_study_env.training_day(e) for e in range(14)]
    assert days[0] == "2024-07-08"
    assert days[11] == "2024-07-19"
    assert days[12] == "2024-07-08"
    _, info = case_study_env.reset()
    assert info["day"] == "2024-07-08"
    _, info = case_study_env.reset()
    assert info["day"] == "2024-07-09"


def test_no_training_days(case_study_hub):
    env = FlexEnv(case_study_hub)
    with pytest.raises(ConfigError):
        env.training_day(0)


def test_physical_step_matches_rbc(case_study_env):
    controller = RuleBasedController(case_study_env.action_spec, RbcConfig())
    case_study_env.reset(options={"day": TEST_DAY})
    rbc = [case_study_env.step_physical(controller.act()).reward for _ in range(96)]

    case_study_env.reset(options={"day": TEST_DAY})
    # the mapper starts at the baseline, so zero deltas reproduce the rule
    mapped = [case_study_env.step(np.zeros(24)).reward for _ in range(96)]
    assert rbc == mapped


def test_set_p_max_changes_peak_term(case_study_env):
    case_study_env.set_p_max(1.0)
    case_study_env.reset(options={"day": TEST_DAY})
    for _ in range(60):
        result = case_study_env.step(np.zeros(24))
    assert result.info["breakdown"].p_peak > 1.0


def test_step_info_carries_named_outputs(case_study_env):
    case_study_env.reset(options={"day": TEST_DAY})
    result = case_study_env.step(np.zeros(24))
    outputs = result.info["outputs"]
    assert [len(u) for u in outputs] == [13, 13, 19, 19]
    table = case_study_env.hub.record.tables[2]
    assert outputs[2]["Fan Electric Power 1"] == table.outputs[0, table.output_names.index("Fan Electric Power 1")]


def test_step_logging_shows_physical_observation(single_office_env, caplog):
    single_office_env.hub.log_steps = True
    single_office_env.reset(options={"day": TEST_DAY})
    with caplog.at_level(logging.DEBUG, logger="flexhub.env.flex_env"):
        single_office_env.step(np.zeros(6))
    lines = [r.message for r in caplog.records if "observed (after clamping)" in r.message]
    assert lines and lines[0].startswith("step 1 ")
