"""
Soft Actor-Critic agent: losses, update block, temperature adaptation and
checkpointing.
"""
import copy
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn as nn

from flexhub.agents.sac.buffer import Batch, BufferMark, ReplayBuffer, Transition
from flexhub.agents.sac.networks import CriticPair, SacHyperparameters, make_policy
from flexhub.exceptions import CheckpointError, NonFiniteError, ShapeError
from flexhub.helpers.seeding import SeedBundle, spawn_seeds

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class TemperatureState(nn.Module):
    """Entropy temperature kept in log space, so alpha > 0 always."""

    def __init__(self, initial_alpha: float = 1.0, dtype: torch.dtype = torch.float32):
        super().__init__()
        self.log_alpha = nn.Parameter(torch.tensor(float(np.log(initial_alpha)), dtype=dtype))

    @property
    def alpha(self) -> torch.Tensor:
        return self.log_alpha.exp()


class UpdateStats(NamedTuple):
    critic1_loss: float
    critic2_loss: float
    actor_loss: float
    alpha_loss: float
    alpha: float
    logprob: float


class AgentSnapshot(NamedTuple):
    """Agent state without replay contents, plus where the buffer stood."""
    state: Dict[str, Any]
    buffer_mark: BufferMark


class LoadedCheckpoint(NamedTuple):
    agent: "SacAgent"
    episode: int
    best_return: Optional[float]
    has_buffer: bool


def make_adam(params: Iterable[torch.Tensor], lr: float) -> torch.optim.Adam:
    return torch.optim.Adam(params, lr=lr, betas=ADAM_BETAS, eps=ADAM_EPS)


def adam_step(optimizer: torch.optim.Optimizer, grads: Sequence[torch.Tensor]):
    """Install ``grads`` on the optimizer's parameters and take one step."""
    params = [p for group in optimizer.param_groups for p in group["params"]]
    if len(grads) != len(params):
        raise ShapeError(f"got {len(grads)} gradients for {len(params)} parameters")
    for p, g in zip(params, grads):
        if tuple(g.shape) != tuple(p.shape):
            raise ShapeError(f"gradient shape {tuple(g.shape)} != parameter shape {tuple(p.shape)}")
        p.grad = g.detach().to(p.dtype).clone()
    optimizer.step()


def polyak_update(online: nn.Module, target: nn.Module, tau: float):
    """target <- tau * online + (1 - tau) * target, in place."""
    online_params = list(online.parameters())
    target_params = list(target.parameters())
    if len(online_params) != len(target_params):
        raise ShapeError(f"{len(online_params)} online tensors vs {len(target_params)} target tensors")
    for o, t in zip(online_params, target_params):
        if o.shape != t.shape:
            raise ShapeError(f"online shape {tuple(o.shape)} != target shape {tuple(t.shape)}")
    with torch.no_grad():
        for o, t in zip(online_params, target_params):
            t.mul_(1.0 - tau).add_(o, alpha=tau)


def soft_target(rewards: torch.Tensor, dones: torch.Tensor, min_q: torch.Tensor,
                next_log_probs: torch.Tensor, alpha: Union[float, torch.Tensor],
                gamma: float) -> torch.Tensor:
    """Bootstrapped soft value target; ``dones`` zeroes the bootstrap."""
    return rewards + gamma * (1.0 - dones) * (min_q - alpha * next_log_probs)


def finite_gradients(what: str, loss: torch.Tensor, module: nn.Module) -> List[torch.Tensor]:
    """Gradients of ``loss`` for every parameter of ``module``; unused ones are zero."""
    if not torch.isfinite(loss).all():
        raise NonFiniteError(what, f"loss = {loss.detach().cpu().numpy()}")
    named = list(module.named_parameters())
    grads = torch.autograd.grad(loss, [p for _, p in named], allow_unused=True)
    result = []
    for (name, p), g in zip(named, grads):
        if g is None:
            g = torch.zeros_like(p)
        elif not torch.isfinite(g).all():
            raise NonFiniteError(what, f"gradient of {name}")
        result.append(g)
    return result


class SacAgent:
    def __init__(
        self,
        obs_dim: int,
        action_dim: int,
        hp: Optional[SacHyperparameters] = None,
        seeds: Optional[SeedBundle] = None,
        dtype: torch.dtype = torch.float32,
    ):
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.hp = hp or SacHyperparameters()
        self.seeds = seeds or spawn_seeds(0)
        self.dtype = dtype
        self.target_entropy = (
            float(self.hp.target_entropy) if self.hp.target_entropy is not None else -float(action_dim)
        )

        self.actor = make_policy(obs_dim, action_dim, self.hp, self.seeds.init, dtype)
        self.critics = CriticPair(obs_dim, action_dim, self.hp, self.seeds.init + 3, dtype)
        self.temperature = TemperatureState(self.hp.initial_alpha, dtype)

        self.actor_optimizer = make_adam(self.actor.parameters(), self.hp.lr_actor)
        self.critic_optimizer = make_adam(self.critics.online.parameters(), self.hp.lr_critic)
        self.alpha_optimizer = make_adam([self.temperature.log_alpha], self.hp.lr_alpha)

        self.generator = torch.Generator().manual_seed(self.seeds.noise)
        self.rng = np.random.default_rng(self.seeds.buffer)
        self.buffer = ReplayBuffer(self.hp.buffer_capacity, obs_dim, action_dim)
        self.updates = 0

    @property
    def alpha(self) -> float:
        return float(self.temperature.alpha.detach())

    @property
    def ready(self) -> bool:
        return len(self.buffer) >= self.hp.batch_size

    def _tensor(self, x) -> torch.Tensor:
        return torch.as_tensor(np.asarray(x), dtype=self.dtype)

    def _batch_tensors(self, batch: Batch) -> Tuple[torch.Tensor, ...]:
        return tuple(self._tensor(x) for x in batch)

    def act(self, obs: Sequence[float], deterministic: bool = False) -> np.ndarray:
        """Agent-space action in [-1, 1] for a single observation."""
        x = self._tensor(obs).unsqueeze(0)
        with torch.no_grad():
            if deterministic:
                a = self.actor.deterministic(x)
            else:
                a, _ = self.actor.sample(x, self.generator)
        return a.clamp(-1.0, 1.0).squeeze(0).cpu().numpy().astype(np.float32)

    def observe(self, transition: Transition):
        self.buffer.add(transition)

    def _policy_sample(self, obs: torch.Tensor, eps: Optional[torch.Tensor]):
        if eps is None:
            return self.actor.sample(obs, self.generator)
        return self.actor.sample_with_noise(obs, eps)

    def critic_target(self, batch: Batch, eps: Optional[torch.Tensor] = None) -> torch.Tensor:
        _, _, rewards, next_obs, dones = self._batch_tensors(batch)
        with torch.no_grad():
            next_actions, next_log_probs = self._policy_sample(next_obs, eps)
            min_q = self.critics.min_target(next_obs, next_actions)
            return soft_target(rewards, dones, min_q, next_log_probs, self.temperature.alpha, self.hp.gamma)

    def critic_losses(self, batch: Batch, y: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        obs, actions = self._tensor(batch.obs), self._tensor(batch.actions)
        q1, q2 = self.critics.online(obs, actions)
        y = y.detach()
        return ((q1 - y) ** 2).mean(), ((q2 - y) ** 2).mean()

    def critic_update(self, batch: Batch, y: torch.Tensor) -> Tuple[float, float]:
        loss1, loss2 = self.critic_losses(batch, y)
        grads = finite_gradients("critic update", loss1 + loss2, self.critics.online)
        adam_step(self.critic_optimizer, grads)
        return float(loss1.detach()), float(loss2.detach())

    def actor_loss(self, obs: torch.Tensor, eps: Optional[torch.Tensor] = None) -> Tuple[torch.Tensor, torch.Tensor]:
        """Policy objective and the log-probabilities of the sampled actions."""
        actions, log_probs = self._policy_sample(obs, eps)
        min_q = self.critics.min_online(obs, actions)
        loss = (self.temperature.alpha.detach() * log_probs - min_q).mean()
        return loss, log_probs

    def actor_update(self, batch: Batch, eps: Optional[torch.Tensor] = None) -> Tuple[float, torch.Tensor]:
        obs = self._tensor(batch.obs)
        loss, log_probs = self.actor_loss(obs, eps)
        adam_step(self.actor_optimizer, finite_gradients("actor update", loss, self.actor))
        return float(loss.detach()), log_probs.detach()

    def temperature_loss(self, log_probs: torch.Tensor) -> torch.Tensor:
        return -(self.temperature.log_alpha * (log_probs.detach() + self.target_entropy)).mean()

    def temperature_update(self, log_probs: torch.Tensor) -> float:
        loss = self.temperature_loss(log_probs)
        adam_step(self.alpha_optimizer, finite_gradients("temperature update", loss, self.temperature))
        return float(loss.detach())

    def update(self, batch: Optional[Batch] = None) -> UpdateStats:
        """One block: critics, actor, temperature, then the target networks."""
        if batch is None:
            batch = self.buffer.sample(self.hp.batch_size, self.rng)
        y = self.critic_target(batch)
        critic1_loss, critic2_loss = self.critic_update(batch, y)
        actor_loss, log_probs = self.actor_update(batch)
        alpha_loss = self.temperature_update(log_probs)
        polyak_update(self.critics.online, self.critics.target, self.hp.tau)
        self.updates += 1
        return UpdateStats(critic1_loss, critic2_loss, actor_loss, alpha_loss, self.alpha,
                           float(log_probs.mean()))

    def state_dict(self, include_buffer: bool = True) -> Dict[str, Any]:
        return {
            "obs_dim": self.obs_dim,
            "action_dim": self.action_dim,
            "hyperparameters": self.hp.model_dump(),
            "dtype": str(self.dtype).replace("torch.", ""),
            "seeds": list(self.seeds),
            "actor": self.actor.state_dict(),
            "critics": self.critics.state_dict(),
            "temperature": self.temperature.state_dict(),
            "optimizers": {
                "actor": self.actor_optimizer.state_dict(),
                "critic": self.critic_optimizer.state_dict(),
                "alpha": self.alpha_optimizer.state_dict(),
            },
            "rng": {
                "noise": self.generator.get_state(),
                "buffer": self.rng.bit_generator.state,
            },
            "buffer": self.buffer.state_dict() if include_buffer else None,
            "updates": self.updates,
        }

    def snapshot(self) -> AgentSnapshot:
        return AgentSnapshot(copy.deepcopy(self.state_dict(include_buffer=False)), self.buffer.mark())

    def load_state_dict(self, state: Dict[str, Any]):
        self.actor.load_state_dict(state["actor"])
        self.critics.load_state_dict(state["critics"])
        self.temperature.load_state_dict(state["temperature"])
        self.actor_optimizer.load_state_dict(state["optimizers"]["actor"])
        self.critic_optimizer.load_state_dict(state["optimizers"]["critic"])
        self.alpha_optimizer.load_state_dict(state["optimizers"]["alpha"])
        self.generator.set_state(state["rng"]["noise"])
        self.rng.bit_generator.state = state["rng"]["buffer"]
        if state.get("buffer") is not None:
            self.buffer.load_state_dict(state["buffer"])
        self.updates = state["updates"]


def save_checkpoint(agent: SacAgent, path: Union[str, Path], episode: int,
                    best_return: Optional[float] = None, include_buffer: bool = True,
                    snapshot: Optional[AgentSnapshot] = None) -> Path:
    """Write the agent, or an earlier ``snapshot`` of it, as a checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if snapshot is None:
        state = agent.state_dict(include_buffer)
    else:
        buffer = agent.buffer.state_dict(snapshot.buffer_mark) if include_buffer else None
        state = {**snapshot.state, "buffer": buffer}
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "episode": episode,
        "best_return": best_return,
        **state,
    }
    torch.save(payload, path)
    logger.info(f"Saved checkpoint {path} (episode {episode})")
    return path


def load_checkpoint(path: Union[str, Path], obs_dim: Optional[int] = None,
                    action_dim: Optional[int] = None) -> LoadedCheckpoint:
    """Restore an agent; ``obs_dim``/``action_dim`` are checked when given."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=False)

    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format_version {version}, expected {CHECKPOINT_FORMAT_VERSION}"
        )
    mismatches: List[str] = []
    if obs_dim is not None and payload["obs_dim"] != obs_dim:
        mismatches.append(f"observation dim expected {obs_dim}, checkpoint has {payload['obs_dim']}")
    if action_dim is not None and payload["action_dim"] != action_dim:
        mismatches.append(f"action dim expected {action_dim}, checkpoint has {payload['action_dim']}")
    if mismatches:
        raise CheckpointError(f"{path}: " + "; ".join(mismatches))

    hp = SacHyperparameters.model_validate(payload["hyperparameters"])
    agent = SacAgent(payload["obs_dim"], payload["action_dim"], hp,
                     SeedBundle(*payload["seeds"]), getattr(torch, payload["dtype"]))
    try:
        agent.load_state_dict(payload)
    except (RuntimeError, KeyError, ValueError) as e:
        raise CheckpointError(f"{path}: corrupt checkpoint ({e})") from e

    logger.info(f"Loaded checkpoint {path} (episode {payload['episode']}, {agent.updates} updates)")
    return LoadedCheckpoint(agent, payload["episode"], payload["best_return"], payload["buffer"] is not None)
