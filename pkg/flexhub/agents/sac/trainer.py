"""
Training and evaluation loops. Every rollout, SAC or baseline, goes through
the same environment and hub path.
"""
import logging
import math
import time
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from flexhub.agents.baseline import RuleBasedController
from flexhub.agents.sac.agent import SacAgent, UpdateStats
from flexhub.agents.sac.buffer import Transition
from flexhub.core.record import SimRecord
from flexhub.env.flex_env import FlexEnv
from flexhub.helpers.formatting import Formatter

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["episode", "day", "return", "alpha", "logprob", "actor_loss", "critic1_loss",
               "critic2_loss", "updates", "peak_power_w"]
CSV_COLUMNS = ["episode", "return", "alpha", "logprob", "actor_loss", "critic1_loss", "critic2_loss"]


class EpisodeLog(NamedTuple):
    episode: int
    day: str
    episode_return: float
    alpha: float
    logprob: float
    actor_loss: float
    critic1_loss: float
    critic2_loss: float
    updates: int
    peak_power_w: float

    def as_row(self) -> dict:
        return dict(zip(LOG_COLUMNS, self))


class TrainingLog:
    """Per-episode training signals; loss columns are NaN before the first update."""

    def __init__(self, entries: Optional[Sequence[EpisodeLog]] = None):
        self.entries: List[EpisodeLog] = list(entries or [])

    @classmethod
    def from_csv(cls, path: Union[str, Path], before: Optional[int] = None) -> "TrainingLog":
        """
        Reload a log written by ``to_csv``, keeping episodes below ``before``.
        Day, update count and peak are not in the file and come back empty.
        """
        frame = pd.read_csv(path)
        missing = [c for c in CSV_COLUMNS if c not in frame.columns]
        if missing:
            raise ValueError(f"{path} lacks columns {missing}")
        if before is not None:
            frame = frame[frame["episode"] < before]
        entries = [
            EpisodeLog(int(row["episode"]), "", float(row["return"]), float(row["alpha"]), float(row["logprob"]),
                       float(row["actor_loss"]), float(row["critic1_loss"]), float(row["critic2_loss"]),
                       0, math.nan)
            for row in frame.sort_values("episode").to_dict("records")
        ]
        return cls(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def append(self, entry: EpisodeLog):
        self.entries.append(entry)

    @property
    def returns(self) -> List[float]:
        return [e.episode_return for e in self.entries]

    @property
    def alphas(self) -> List[float]:
        return [e.alpha for e in self.entries]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([e.as_row() for e in self.entries], columns=LOG_COLUMNS)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame()[CSV_COLUMNS].to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
        return path


def _mean(values: Sequence[float]) -> float:
    return float(np.mean(values)) if len(values) else math.nan


def summarize_episode(episode: int, day: str, episode_return: float, alpha: float,
                      stats: Sequence[UpdateStats], peak_power_w: float) -> EpisodeLog:
    return EpisodeLog(
        episode=episode,
        day=day,
        episode_return=episode_return,
        alpha=alpha,
        logprob=_mean([s.logprob for s in stats]),
        actor_loss=_mean([s.actor_loss for s in stats]),
        critic1_loss=_mean([s.critic1_loss for s in stats]),
        critic2_loss=_mean([s.critic2_loss for s in stats]),
        updates=len(stats),
        peak_power_w=peak_power_w,
    )


def train(
    env: FlexEnv,
    agent: SacAgent,
    episodes: int,
    start_episode: int = 0,
    log: Optional[TrainingLog] = None,
    callback: Optional[Callable[[EpisodeLog], None]] = None,
) -> TrainingLog:
    """
    Sample, step, store; once the buffer holds a batch, run one update block
    per environment step. Episode ``e`` runs on ``env.training_day(e)``.
    """
    log = log if log is not None else TrainingLog()
    end = start_episode + episodes
    for episode in range(start_episode, end):
        started = time.monotonic()
        day = env.training_day(episode)
        obs, _ = env.reset(options={"day": day})
        total, peak = 0.0, 0.0
        stats: List[UpdateStats] = []
        done = False
        while not done:
            action = agent.act(obs)
            result = env.step(action)
            agent.observe(Transition(obs, action, result.reward, result.observation, result.terminated))
            if agent.ready:
                stats.append(agent.update())
            obs = result.observation
            total += result.reward
            peak = max(peak, result.info["power_w"])
            done = result.terminated or result.truncated

        entry = summarize_episode(episode, day, total, agent.alpha, stats, peak)
        log.append(entry)
        logger.info(Formatter.format_episode(episode, end, day, total, entry.alpha, peak,
                                             time.monotonic() - started))
        if callback is not None:
            callback(entry)
    return log


def rollout(env: FlexEnv, policy: Callable[[np.ndarray], object], day: str,
            physical: bool = False) -> Tuple[float, Optional[SimRecord]]:
    """Run one full day; ``physical`` policies return per-unit setpoint lists."""
    obs, _ = env.reset(options={"day": day})
    total = 0.0
    done = False
    while not done:
        action = policy(obs)
        result = env.step_physical(action) if physical else env.step(action)
        total += result.reward
        obs = result.observation
        done = result.terminated or result.truncated
    return total, env.hub.record


def evaluate(agent: SacAgent, env: FlexEnv, day: str) -> Tuple[float, Optional[SimRecord]]:
    """Noise-free rollout with a = tanh(mean)."""
    episode_return, record = rollout(env, lambda obs: agent.act(obs, deterministic=True), day)
    logger.info(f"Evaluation on {day}: return {episode_return:.3f}")
    return episode_return, record


def rollout_rbc(env: FlexEnv, controller: RuleBasedController, day: str) -> Tuple[float, Optional[SimRecord]]:
    episode_return, record = rollout(env, controller.act, day, physical=True)
    logger.info(f"Baseline on {day}: return {episode_return:.3f}")
    return episode_return, record
