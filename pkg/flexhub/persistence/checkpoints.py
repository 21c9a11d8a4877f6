"""
Registry of a run's checkpoints (final, best, last good) kept in a storage
backend next to the checkpoint files themselves.
"""
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

from flexhub.agents.sac.agent import AgentSnapshot, SacAgent, save_checkpoint
from flexhub.persistence.storage import StorageBackend

logger = logging.getLogger(__name__)

KINDS = ("final", "best", "last_good")
BUFFERED_KINDS = ("final", "last_good")


class CheckpointRegistry:
    """Writes checkpoint files and records their metadata under ``checkpoint:<run>:<kind>``."""

    def __init__(self, storage: StorageBackend, directory: Path, run: str = "default"):
        self.storage = storage
        self.directory = Path(directory)
        self.run = run
        self.best_return: Optional[float] = None

    def _key(self, kind: str) -> str:
        return f"checkpoint:{self.run}:{kind}"

    def path_for(self, kind: str) -> Path:
        if kind not in KINDS:
            raise ValueError(f"unknown checkpoint kind '{kind}'")
        return self.directory / f"{kind}.pt"

    def save(self, kind: str, agent: SacAgent, episode: int, episode_return: Optional[float] = None,
             snapshot: Optional[AgentSnapshot] = None) -> Path:
        path = save_checkpoint(agent, self.path_for(kind), episode, self.best_return,
                               include_buffer=kind in BUFFERED_KINDS, snapshot=snapshot)
        self.storage.set(self._key(kind), {
            "path": str(path),
            "episode": episode,
            "return": episode_return,
            "updates": agent.updates if snapshot is None else snapshot.state["updates"],
            "saved_at": datetime.now(timezone.utc).isoformat(),
        })
        return path

    def offer_best(self, agent: SacAgent, episode: int, episode_return: float) -> bool:
        """Save ``best.pt`` when ``episode_return`` beats every earlier offer."""
        if self.best_return is not None and episode_return <= self.best_return:
            return False
        self.best_return = episode_return
        self.save("best", agent, episode, episode_return)
        logger.debug(f"New best return {episode_return:.3f} at episode {episode}")
        return True

    def get(self, kind: str) -> Optional[Dict[str, Any]]:
        return self.storage.get(self._key(kind))

    def entries(self) -> Dict[str, Dict[str, Any]]:
        prefix = f"checkpoint:{self.run}:"
        return {key[len(prefix):]: value for key, value in self.storage.get_pattern(prefix + "*").items()}
