"""
Replay buffer: a fixed-capacity numpy ring that overwrites the oldest entry.
"""
from typing import Any, Dict, NamedTuple, Optional

import numpy as np

from flexhub.exceptions import ShapeError


class Transition(NamedTuple):
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: bool


class Batch(NamedTuple):
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray


class BufferMark(NamedTuple):
    cursor: int
    size: int
    added: int


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.actions = np.zeros((capacity, action_dim), dtype=np.float32)
        self.rewards = np.zeros(capacity, dtype=np.float32)
        self.next_obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.dones = np.zeros(capacity, dtype=np.float32)
        self.cursor = 0
        self.size = 0
        self.added = 0

    def __len__(self) -> int:
        return self.size

    def add(self, transition: Transition):
        obs, action, reward, next_obs, done = transition
        if np.shape(obs) != (self.obs_dim,) or np.shape(next_obs) != (self.obs_dim,):
            raise ShapeError(f"observation shape {np.shape(obs)} != ({self.obs_dim},)")
        if np.shape(action) != (self.action_dim,):
            raise ShapeError(f"action shape {np.shape(action)} != ({self.action_dim},)")

        i = self.cursor
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.added += 1

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform draw with replacement."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx], self.dones[idx])

    def ordered(self) -> Batch:
        """Stored transitions from oldest to newest."""
        start = self.cursor if self.size == self.capacity else 0
        idx = (start + np.arange(self.size)) % self.capacity
        return Batch(self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx], self.dones[idx])

    def mark(self) -> BufferMark:
        return BufferMark(self.cursor, self.size, self.added)

    def _slots_at(self, mark: BufferMark) -> np.ndarray:
        """Storage slots still holding the transitions present at ``mark``, oldest first."""
        added_since = self.added - mark.added
        if mark.size + added_since <= self.capacity:
            return np.arange(mark.size)
        start = mark.cursor if mark.size == self.capacity else 0
        lost = min(mark.size, mark.size + added_since - self.capacity)
        return (start + np.arange(lost, mark.size)) % self.capacity

    def state_dict(self, mark: Optional[BufferMark] = None) -> Dict[str, Any]:
        """
        Contents as they were at ``mark`` (default: now). Transitions added
        since are left out; ones overwritten since are gone.
        """
        if mark is None or mark.added == self.added:
            idx, cursor = np.arange(self.size), self.cursor
        else:
            idx = self._slots_at(mark)
            cursor = mark.cursor if len(idx) == mark.size else len(idx) % self.capacity
        return {
            "capacity": self.capacity,
            "cursor": cursor,
            "size": len(idx),
            "obs": self.obs[idx].copy(),
            "actions": self.actions[idx].copy(),
            "rewards": self.rewards[idx].copy(),
            "next_obs": self.next_obs[idx].copy(),
            "dones": self.dones[idx].copy(),
        }

    def load_state_dict(self, state: Dict[str, Any]):
        if state["capacity"] != self.capacity:
            raise ShapeError(f"buffer capacity {state['capacity']} != {self.capacity}")
        n = state["size"]
        self.obs[:n] = state["obs"]
        self.actions[:n] = state["actions"]
        self.rewards[:n] = state["rewards"]
        self.next_obs[:n] = state["next_obs"]
        self.dones[:n] = state["dones"]
        self.cursor = state["cursor"]
        self.size = n
        self.added = n
