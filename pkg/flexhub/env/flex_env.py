"""
Gymnasium environment over the communication hub. One episode is one
simulated day from midnight; the hub works in physical values and all
scaling happens here.
"""
import logging
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from flexhub.agents.baseline import RbcConfig, rbc_values
from flexhub.core.hub import CommunicationHub
from flexhub.env.actions import ActionMapper, ActionMapping, ActionMode, build_action_spec
from flexhub.env.observation import assemble_observation, build_observation_spec, denormalize
from flexhub.env.reward import (
    RewardBreakdown,
    RewardConfig,
    comfort_penalty,
    compute_reward,
    peak_penalty,
    power_penalty,
)
from flexhub.exceptions import ConfigError, EpisodeDoneError
from flexhub.units.contract import VariableKind

logger = logging.getLogger(__name__)


class StepResult(NamedTuple):
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    info: Dict[str, Any]


class FlexEnv(gym.Env):
    metadata = {"render_modes": []}

    def __init__(
        self,
        hub: CommunicationHub,
        reward_config: Optional[RewardConfig] = None,
        training_days: Sequence[str] = (),
        action_mode: str = "box",
        action_mapping: str = "relative_incremental",
        rbc: Optional[RbcConfig] = None,
    ):
        super().__init__()
        self.hub = hub
        self.reward_config = reward_config or RewardConfig()
        self.training_days = [str(d) for d in training_days]

        layout = [meta for _, meta in hub.layout]
        self.observation_spec = build_observation_spec(layout)
        self.action_spec = build_action_spec(layout, ActionMode(action_mode), ActionMapping(action_mapping))
        self.mapper = ActionMapper(self.action_spec, rbc_values(self.action_spec, rbc or RbcConfig()))

        self.observation_space = spaces.Box(0.0, 1.0, (self.observation_spec.size,), dtype=np.float32)
        if self.action_spec.mode is ActionMode.BOX:
            self.action_space = spaces.Box(-1.0, 1.0, (self.action_spec.size,), dtype=np.float32)
        else:
            self.action_space = spaces.MultiDiscrete(self.action_spec.bins)

        self._coil = self.observation_spec.channels(VariableKind.COIL_POWER)
        self._fan = self.observation_spec.channels(VariableKind.FAN_POWER)
        self._zones = self.observation_spec.channels(VariableKind.ZONE_TEMP)

        self.day: Optional[str] = None
        self.current_step = 0
        self.episodes_started = 0
        self._done = True

    def training_day(self, episode: int) -> str:
        """Round-robin over the training days."""
        if not self.training_days:
            raise ConfigError("no training days configured", ("hub", "training_days"))
        return self.training_days[episode % len(self.training_days)]

    def set_p_max(self, p_max: float):
        self.reward_config = self.reward_config.model_copy(update={"p_max": float(p_max)})

    def reset(self, *, seed: Optional[int] = None, options: Optional[Dict[str, Any]] = None):
        super().reset(seed=seed)
        day = (options or {}).get("day")
        if day is None:
            day = self.training_day(self.episodes_started)
        self.episodes_started += 1

        self.day = str(day)
        raw = self.hub.reset(self.day)
        self.mapper.reset()
        self.current_step = 0
        self._done = False
        return self._observe(raw, 0), {"day": self.day, "step": 0}

    def step(self, action) -> StepResult:
        self._require_running()
        physical = self.mapper.map(action)
        return self._advance(self.action_spec.split(physical))

    def step_physical(self, per_unit: Sequence[Sequence[float]]) -> StepResult:
        """Apply physical setpoints directly, bypassing the action mapping."""
        self._require_running()
        self.mapper.observe(self.action_spec.flatten(per_unit))
        return self._advance([list(values) for values in per_unit])

    def _require_running(self):
        if self._done:
            raise EpisodeDoneError("episode is finished; call reset()")

    def _advance(self, per_unit: List[List[float]]) -> StepResult:
        k = self.current_step
        self.hub.apply_actions(per_unit, k)
        self.hub.step_all()
        self.current_step = k + 1

        raw = self.hub.collect_outputs(self.current_step)
        hour = self.hub.axis.hour_at(k)
        breakdown = self.reward(raw, hour)
        if self.hub.record is not None:
            self.hub.record.add_reward(breakdown.as_row(self.current_step, hour))

        terminated = self.current_step >= self.hub.axis.n_steps
        self._done = terminated
        info = {
            "day": self.day,
            "step": self.current_step,
            "breakdown": breakdown,
            "power_w": breakdown.power_w,
            "setpoints": per_unit,
            "outputs": self.hub.unit_outputs(raw),
        }
        return StepResult(self._observe(raw, self.current_step), breakdown.reward, terminated, False, info)

    def reward(self, raw: np.ndarray, hour: float) -> RewardBreakdown:
        """Reward for an interval starting at ``hour`` that ended with outputs ``raw``."""
        cfg = self.reward_config
        power, p_hvac = power_penalty(raw[self._coil], raw[self._fan], cfg.p_max)
        p_temp = comfort_penalty(raw[self._zones], cfg.comfort_band, hour, cfg.occupied_hours)
        p_peak = peak_penalty(power, cfg.p_max, p_hvac)
        return compute_reward(power, p_hvac, p_temp, p_peak, cfg)

    def _observe(self, raw: np.ndarray, k: int) -> np.ndarray:
        observation = assemble_observation(raw, self.observation_spec, self.hub.axis.hour_at(k))
        if self.hub.log_steps:
            seen = denormalize(observation, self.observation_spec)
            logger.debug(f"step {k} observed (after clamping) {np.round(seen, 3).tolist()}")
        return observation.astype(np.float32)

    def close(self):
        self.hub.close()
