"""
Actor and critic networks for Soft Actor-Critic.
"""
import copy
import logging
import math
from typing import List, Literal, NamedTuple, Optional, Sequence, Tuple

import torch
import torch.nn as nn
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from torch.distributions import Beta, Normal

from flexhub.exceptions import ConfigError, NonFiniteError

logger = logging.getLogger(__name__)

TANH_EPS = 1e-6
BETA_CLIP = 1e-6

INIT_SCHEMES = ("kaiming_uniform", "kaiming_normal", "xavier_uniform", "orthogonal")
ACTIVATIONS = ("relu", "gelu", "elu", "tanh", "sigmoid", "leaky_relu")


class SacHyperparameters(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gamma: float = Field(default=0.995, gt=0, lt=1)
    tau: float = Field(default=0.005, gt=0, lt=1)
    target_entropy: Optional[float] = Field(default=None, description="Defaults to -action_dim")
    lr_actor: float = Field(default=3e-4, gt=0)
    lr_critic: float = Field(default=3e-4, gt=0)
    lr_alpha: float = Field(default=3e-4, gt=0)
    buffer_capacity: int = Field(default=1_000_000, ge=1)
    batch_size: int = Field(default=256, ge=1)
    hidden_sizes: List[int] = Field(default_factory=lambda: [256, 256], min_length=1)
    activation: Literal["relu", "gelu", "elu", "tanh", "sigmoid", "leaky_relu"] = "leaky_relu"
    leaky_slope: float = Field(default=0.2, ge=0)
    init: Literal["kaiming_uniform", "kaiming_normal", "xavier_uniform", "orthogonal"] = "kaiming_uniform"
    layer_norm: bool = True
    log_std_min: float = -20.0
    log_std_max: float = 3.0
    distribution: Literal["gaussian_tanh", "gaussian", "beta"] = "gaussian_tanh"
    initial_alpha: float = Field(default=1.0, gt=0)

    @field_validator('hidden_sizes')
    def validate_hidden(cls, v):
        if any(width < 1 for width in v):
            raise ValueError('hidden widths must be positive')
        return v

    @model_validator(mode='after')
    def validate_consistency(self):
        if self.batch_size > self.buffer_capacity:
            raise ValueError(f'batch_size ({self.batch_size}) exceeds buffer_capacity ({self.buffer_capacity})')
        if not self.log_std_min < self.log_std_max:
            raise ValueError('log_std_min must be below log_std_max')
        return self


def make_activation(kind: str, leaky_slope: float = 0.2) -> nn.Module:
    if kind == "leaky_relu":
        return nn.LeakyReLU(leaky_slope)
    modules = {"relu": nn.ReLU, "gelu": nn.GELU, "elu": nn.ELU, "tanh": nn.Tanh, "sigmoid": nn.Sigmoid}
    if kind not in modules:
        raise ValueError(f"unknown activation '{kind}', expected one of {ACTIVATIONS}")
    return modules[kind]()


class Mlp(nn.Module):
    """Linear -> LayerNorm -> activation on every hidden layer; linear output."""

    def __init__(self, sizes: Sequence[int], activation: str = "leaky_relu", layer_norm: bool = True,
                 leaky_slope: float = 0.2, activate_output: bool = False):
        super().__init__()
        if len(sizes) < 2:
            raise ValueError(f"an MLP needs at least input and output sizes, got {list(sizes)}")
        self.sizes = list(sizes)
        self.linears = nn.ModuleList(nn.Linear(a, b) for a, b in zip(sizes[:-1], sizes[1:]))
        n_activated = len(self.linears) if activate_output else len(self.linears) - 1
        self.norms = nn.ModuleList(
            nn.LayerNorm(sizes[i + 1]) if layer_norm else nn.Identity() for i in range(n_activated)
        )
        self.activation = make_activation(activation, leaky_slope)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for i, linear in enumerate(self.linears):
            x = linear(x)
            if i < len(self.norms):
                x = self.activation(self.norms[i](x))
        return x


def _gain_nonlinearity(activation: str) -> str:
    if activation in ("relu", "leaky_relu", "tanh", "sigmoid"):
        return activation
    return "relu"


def _init_weight(weight: torch.Tensor, scheme: str, activation: str, leaky_slope: float):
    if scheme == "kaiming_uniform":
        nn.init.kaiming_uniform_(weight, a=leaky_slope, nonlinearity=_gain_nonlinearity(activation))
    elif scheme == "kaiming_normal":
        nn.init.kaiming_normal_(weight, a=leaky_slope, nonlinearity=_gain_nonlinearity(activation))
    elif scheme == "xavier_uniform":
        nn.init.xavier_uniform_(weight)
    else:
        nn.init.orthogonal_(weight)


def init_mlp(
    sizes: Sequence[int],
    init: str = "kaiming_uniform",
    activation: str = "leaky_relu",
    seed: int = 0,
    layer_norm: bool = True,
    leaky_slope: float = 0.2,
    activate_output: bool = False,
    dtype: torch.dtype = torch.float32,
) -> Mlp:
    """Build an MLP with weights drawn from ``init``, zero biases and unit LayerNorm gains."""
    if init not in INIT_SCHEMES:
        raise ValueError(f"unknown init scheme '{init}', expected one of {INIT_SCHEMES}")
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        mlp = Mlp(sizes, activation, layer_norm, leaky_slope, activate_output)
        for linear in mlp.linears:
            _init_weight(linear.weight, init, activation, leaky_slope)
            nn.init.zeros_(linear.bias)
    return mlp.to(dtype)


class PolicyOutput(NamedTuple):
    mean: torch.Tensor
    log_std: torch.Tensor


def sample_action(out: PolicyOutput, eps: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Reparameterized tanh-Gaussian sample and its log-density."""
    std = out.log_std.exp()
    u = out.mean + std * eps
    a = torch.tanh(u)
    log_prob = Normal(out.mean, std).log_prob(u).sum(-1)
    log_prob = log_prob - torch.log(1.0 - a.pow(2) + TANH_EPS).sum(-1)
    return a, log_prob


class Actor(nn.Module):
    """Tanh-squashed Gaussian policy with a shared trunk and two heads."""

    def __init__(self, obs_dim: int, action_dim: int, hp: SacHyperparameters, seed: int = 0,
                 dtype: torch.dtype = torch.float32):
        super().__init__()
        self.action_dim = action_dim
        self.log_std_bounds = (hp.log_std_min, hp.log_std_max)
        hidden = list(hp.hidden_sizes)
        self.trunk = init_mlp([obs_dim] + hidden, hp.init, hp.activation, seed, hp.layer_norm,
                              hp.leaky_slope, activate_output=True, dtype=dtype)
        self.mean_head = init_mlp([hidden[-1], action_dim], hp.init, hp.activation, seed + 1,
                                  leaky_slope=hp.leaky_slope, dtype=dtype)
        self.log_std_head = init_mlp([hidden[-1], action_dim], hp.init, hp.activation, seed + 2,
                                     leaky_slope=hp.leaky_slope, dtype=dtype)

    def forward_policy(self, obs: torch.Tensor) -> PolicyOutput:
        if not torch.isfinite(obs).all():
            raise NonFiniteError("policy input")
        h = self.trunk(obs)
        log_std = self.log_std_head(h).clamp(*self.log_std_bounds)
        return PolicyOutput(self.mean_head(h), log_std)

    def sample_with_noise(self, obs: torch.Tensor, eps: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        return sample_action(self.forward_policy(obs), eps)

    def noise_like(self, obs: torch.Tensor, generator: torch.Generator) -> torch.Tensor:
        shape = obs.shape[:-1] + (self.action_dim,)
        return torch.randn(shape, generator=generator, dtype=obs.dtype)

    def sample(self, obs: torch.Tensor, generator: torch.Generator) -> Tuple[torch.Tensor, torch.Tensor]:
        return self.sample_with_noise(obs, self.noise_like(obs, generator))

    def deterministic(self, obs: torch.Tensor) -> torch.Tensor:
        return torch.tanh(self.forward_policy(obs).mean)


class GaussianPolicy(Actor):
    """Unsquashed Gaussian; actions are clipped to [-1, 1] before reaching the environment."""

    def sample_with_noise(self, obs, eps):
        out = self.forward_policy(obs)
        std = out.log_std.exp()
        u = out.mean + std * eps
        return u, Normal(out.mean, std).log_prob(u).sum(-1)

    def deterministic(self, obs):
        return self.forward_policy(obs).mean.clamp(-1.0, 1.0)


class BetaOutput(NamedTuple):
    concentration1: torch.Tensor
    concentration0: torch.Tensor


class BetaPolicy(Actor):
    """Beta policy on (0, 1) mapped affinely onto [-1, 1]."""

    def forward_beta(self, obs: torch.Tensor) -> BetaOutput:
        out = self.forward_policy(obs)
        softplus = nn.functional.softplus
        return BetaOutput(softplus(out.mean) + 1.0, softplus(out.log_std) + 1.0)

    def _sample_unit(self, dist: Beta, generator: torch.Generator) -> torch.Tensor:
        seed = int(torch.randint(0, 2**31 - 1, (1,), generator=generator))
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            return dist.rsample()

    def sample(self, obs, generator):
        out = self.forward_beta(obs)
        dist = Beta(out.concentration1, out.concentration0)
        x = self._sample_unit(dist, generator).clamp(BETA_CLIP, 1.0 - BETA_CLIP)
        log_prob = dist.log_prob(x).sum(-1) - self.action_dim * math.log(2.0)
        return 2.0 * x - 1.0, log_prob

    def sample_with_noise(self, obs, eps):
        raise ConfigError("the beta policy draws its own noise; explicit noise needs a gaussian distribution",
                          ("sac", "distribution"))

    def deterministic(self, obs):
        out = self.forward_beta(obs)
        return 2.0 * out.concentration1 / (out.concentration1 + out.concentration0) - 1.0


POLICIES = {"gaussian_tanh": Actor, "gaussian": GaussianPolicy, "beta": BetaPolicy}


def make_policy(obs_dim: int, action_dim: int, hp: SacHyperparameters, seed: int = 0,
                dtype: torch.dtype = torch.float32) -> Actor:
    return POLICIES[hp.distribution](obs_dim, action_dim, hp, seed, dtype)


class Critic(nn.Module):
    """Twin Q-networks on the concatenated (state, action)."""

    def __init__(self, obs_dim: int, action_dim: int, hp: SacHyperparameters, seed: int = 0,
                 dtype: torch.dtype = torch.float32):
        super().__init__()
        sizes = [obs_dim + action_dim] + list(hp.hidden_sizes) + [1]
        self.q1 = init_mlp(sizes, hp.init, hp.activation, seed, hp.layer_norm, hp.leaky_slope, dtype=dtype)
        self.q2 = init_mlp(sizes, hp.init, hp.activation, seed + 1, hp.layer_norm, hp.leaky_slope, dtype=dtype)

    def forward(self, obs: torch.Tensor, action: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        x = torch.cat([obs, action], dim=-1)
        return self.q1(x).squeeze(-1), self.q2(x).squeeze(-1)


class CriticPair(nn.Module):
    """Online twin critics and their Polyak-averaged targets."""

    def __init__(self, obs_dim: int, action_dim: int, hp: SacHyperparameters, seed: int = 0,
                 dtype: torch.dtype = torch.float32):
        super().__init__()
        self.online = Critic(obs_dim, action_dim, hp, seed, dtype)
        self.target = copy.deepcopy(self.online)
        self.target.requires_grad_(False)

    def min_target(self, obs: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        q1, q2 = self.target(obs, action)
        return torch.minimum(q1, q2)

    def min_online(self, obs: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        q1, q2 = self.online(obs, action)
        return torch.minimum(q1, q2)
