import math

import numpy as np
import pytest
import torch

from flexhub.agents.sac import agent as agent_module
from flexhub.agents.sac.agent import SacAgent, finite_gradients, soft_target
from flexhub.agents.sac.buffer import Batch, Transition
from flexhub.agents.sac.networks import SacHyperparameters
from flexhub.exceptions import ConfigError, NonFiniteError
from flexhub.helpers.seeding import spawn_seeds

OBS_DIM, ACTION_DIM = 5, 3
H = 1e-5


def _hp(**kwargs):
    values = dict(hidden_sizes=[8, 8], activation="tanh", batch_size=16, buffer_capacity=64)
    values.update(kwargs)
    return SacHyperparameters(**values)


def _agent(seed=0, **kwargs):
    return SacAgent(OBS_DIM, ACTION_DIM, _hp(**kwargs), spawn_seeds(seed), dtype=torch.float64)


def _batch(seed=0, n=16, dones=0.0):
    rng = np.random.default_rng(seed)
    return Batch(
        rng.normal(size=(n, OBS_DIM)),
        rng.uniform(-0.95, 0.95, size=(n, ACTION_DIM)),
        rng.normal(size=n),
        rng.normal(size=(n, OBS_DIM)),
        np.full(n, dones),
    )


def _relative_error(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-4)


def _check_gradients(loss_fn, params, rng, entries=6):
    """Compare autograd against central differences on random entries."""
    grads = torch.autograd.grad(loss_fn(), params, allow_unused=True)
    worst = 0.0
    for p, g in zip(params, grads):
        g = torch.zeros_like(p) if g is None else g
        flat = p.data.view(-1)
        for i in rng.choice(flat.numel(), size=min(entries, flat.numel()), replace=False):
            original = flat[i].item()
            with torch.no_grad():
                flat[i] = original + H
                up = loss_fn().item()
                flat[i] = original - H
                down = loss_fn().item()
                flat[i] = original
            numeric = (up - down) / (2 * H)
            worst = max(worst, _relative_error(g.view(-1)[i].item(), numeric))
    return worst


@pytest.mark.parametrize("seed", range(20))
def test_critic_loss_gradients(seed):
    agent = _agent(seed)
    batch = _batch(seed)
    y = agent.critic_target(batch)
    params = list(agent.critics.online.parameters())
    loss = lambda: sum(agent.critic_losses(batch, y))  # noqa: E731
    assert _check_gradients(loss, params, np.random.default_rng(seed)) < 1e-4


@pytest.mark.parametrize("seed", range(20))
def test_actor_loss_gradients(seed):
    agent = _agent(seed)
    obs = torch.as_tensor(_batch(seed).obs)
    eps = torch.randn(obs.shape[0], ACTION_DIM, generator=torch.Generator().manual_seed(seed), dtype=torch.float64)
    params = list(agent.actor.parameters())
    loss = lambda: agent.actor_loss(obs, eps)[0]  # noqa: E731
    assert _check_gradients(loss, params, np.random.default_rng(seed)) < 1e-4


@pytest.mark.parametrize("seed", range(20))
def test_temperature_loss_gradient(seed):
    agent = _agent(seed, initial_alpha=0.3 + seed / 10.0)
    log_probs = torch.as_tensor(np.random.default_rng(seed).normal(3.0, 2.0, size=16))
    loss = lambda: agent.temperature_loss(log_probs)  # noqa: E731
    assert _check_gradients(loss, [agent.temperature.log_alpha], np.random.default_rng(seed)) < 1e-4


def test_temperature_gradient_sign():
    agent = _agent()
    target = -agent.target_entropy  # 3 for three action dims

    def grad(mean_log_prob):
        loss = agent.temperature_loss(torch.full((8,), float(mean_log_prob), dtype=torch.float64))
        return torch.autograd.grad(loss, agent.temperature.log_alpha)[0].item()

    assert grad(target) == 0.0
    assert grad(target + 1.0) < 0.0
    assert grad(target - 1.0) > 0.0


def test_temperature_update_direction():
    deterministic = _agent()
    before = deterministic.temperature.log_alpha.item()
    deterministic.temperature_update(torch.full((8,), 10.0, dtype=torch.float64))
    assert deterministic.temperature.log_alpha.item() > before

    exploratory = _agent()
    exploratory.temperature_update(torch.full((8,), -10.0, dtype=torch.float64))
    assert exploratory.temperature.log_alpha.item() < before


def test_initial_alpha_and_target_entropy():
    agent = _agent()
    assert agent.alpha == pytest.approx(1.0)
    assert agent.target_entropy == -3.0
    assert SacAgent(53, 24, _hp()).target_entropy == -24.0
    assert _agent(target_entropy=-1.5).target_entropy == -1.5


def test_terminal_transition_target_is_reward():
    agent = _agent()
    batch = _batch(dones=1.0)
    torch.testing.assert_close(agent.critic_target(batch), torch.as_tensor(batch.rewards), rtol=0, atol=0)


def _constant_critics(agent, q1, q2, online=False):
    critic = agent.critics.online if online else agent.critics.target
    with torch.no_grad():
        for net, value in ((critic.q1, q1), (critic.q2, q2)):
            net.linears[-1].weight.zero_()
            net.linears[-1].bias.fill_(value)


def test_bootstrap_uses_smaller_target():
    agent = _agent()
    _constant_critics(agent, 2.0, 3.0)
    with torch.no_grad():
        agent.temperature.log_alpha.fill_(-math.inf)
    batch = _batch()
    batch = batch._replace(rewards=np.zeros(16))
    y = agent.critic_target(batch)
    torch.testing.assert_close(y, torch.full((16,), agent.hp.gamma * 2.0, dtype=torch.float64))


def test_soft_target_degenerate_weights():
    min_q = torch.tensor([1.5, -0.25])
    y = soft_target(torch.zeros(2), torch.zeros(2), min_q, torch.tensor([9.0, -4.0]), 0.0, 1.0)
    assert torch.equal(y, min_q)
    y = soft_target(torch.ones(2), torch.zeros(2), min_q, torch.tensor([2.0, 2.0]), 0.5, 0.9)
    torch.testing.assert_close(y, 1.0 + 0.9 * (min_q - 1.0))


def test_perfect_critic_has_zero_loss_and_gradient():
    agent = _agent()
    online = agent.critics.online
    online.q2.load_state_dict(online.q1.state_dict())
    batch = _batch()
    with torch.no_grad():
        y, _ = online(torch.as_tensor(batch.obs), torch.as_tensor(batch.actions))
    loss1, loss2 = agent.critic_losses(batch, y)
    assert loss1.item() == 0.0 and loss2.item() == 0.0
    grads = torch.autograd.grad(loss1 + loss2, list(online.parameters()), allow_unused=True)
    assert all(g is None or torch.all(g == 0) for g in grads)


def test_critic_overfits_fixed_batch():
    agent = _agent(lr_critic=1e-2)
    batch = _batch()
    y = agent.critic_target(batch)
    first = sum(agent.critic_update(batch, y))
    for _ in range(200):
        last = sum(agent.critic_update(batch, y))
    assert last < 0.5 * first


def test_constant_critics_and_zero_alpha_give_zero_actor_gradient():
    agent = _agent()
    _constant_critics(agent, 4.0, 4.0, online=True)
    with torch.no_grad():
        agent.temperature.log_alpha.fill_(-math.inf)
    obs = torch.as_tensor(_batch().obs)
    loss, _ = agent.actor_loss(obs)
    assert loss.item() == pytest.approx(-4.0)
    grads = torch.autograd.grad(loss, list(agent.actor.parameters()), allow_unused=True)
    assert all(g is None or torch.all(g == 0) for g in grads)


def test_large_alpha_raises_entropy():
    agent = _agent(lr_actor=1e-2, initial_alpha=10.0)
    _constant_critics(agent, 0.0, 0.0, online=True)
    batch = _batch(n=64)
    obs = torch.as_tensor(batch.obs)
    eps = torch.randn(64, ACTION_DIM, generator=torch.Generator().manual_seed(9), dtype=torch.float64)

    def entropy():
        with torch.no_grad():
            return -agent.actor.sample_with_noise(obs, eps)[1].mean().item()

    before = entropy()
    for _ in range(200):
        agent.actor_update(batch)
    assert entropy() > before


def test_critics_are_not_trained_by_actor_update():
    agent = _agent()
    before = [p.detach().clone() for p in agent.critics.online.parameters()]
    agent.actor_update(_batch())
    for p, old in zip(agent.critics.online.parameters(), before):
        assert torch.equal(p, old)
        assert p.requires_grad


def test_update_block_moves_targets_slowly():
    agent = _agent(tau=0.01)
    online_before = [p.detach().clone() for p in agent.critics.online.parameters()]
    target_before = [p.detach().clone() for p in agent.critics.target.parameters()]
    stats = agent.update(_batch())
    assert agent.updates == 1
    assert math.isfinite(stats.critic1_loss) and math.isfinite(stats.actor_loss)
    assert stats.alpha == pytest.approx(agent.alpha)
    for o, t, o_old, t_old in zip(agent.critics.online.parameters(), agent.critics.target.parameters(),
                                  online_before, target_before):
        torch.testing.assert_close(t, 0.99 * t_old + 0.01 * o.detach())


def test_non_finite_reward_aborts_before_step():
    agent = _agent()
    batch = _batch()._replace(rewards=np.full(16, np.nan))
    before = [p.detach().clone() for p in agent.critics.online.parameters()]
    with pytest.raises(NonFiniteError, match="critic update"):
        agent.update(batch)
    for p, old in zip(agent.critics.online.parameters(), before):
        assert torch.equal(p, old)


def test_update_block_steps_each_optimizer_once(monkeypatch):
    agent = _agent()
    stepped = []
    real_step = agent_module.adam_step

    def counting_step(optimizer, grads):
        stepped.append(optimizer)
        real_step(optimizer, grads)

    monkeypatch.setattr(agent_module, "adam_step", counting_step)
    agent.update(_batch())
    assert stepped == [agent.critic_optimizer, agent.actor_optimizer, agent.alpha_optimizer]


def test_non_finite_gradient_is_named():
    layer = torch.nn.Linear(2, 1)
    loss = (layer(torch.tensor([[1.0, 0.0]])) * torch.tensor(math.inf) * 0.0).sum()
    with pytest.raises(NonFiniteError, match="loss"):
        finite_gradients("critic update", loss, layer)
    with torch.no_grad():
        layer.weight.zero_()
    # d sqrt(w) / dw is infinite at zero while the loss stays finite
    with pytest.raises(NonFiniteError, match="gradient of weight"):
        finite_gradients("actor update", layer.weight.sqrt().sum(), layer)


def test_beta_policy_trains_without_explicit_noise():
    agent = _agent(distribution="beta")
    before = [p.detach().clone() for p in agent.actor.parameters()]
    stats = agent.update(_batch())
    assert math.isfinite(stats.actor_loss) and math.isfinite(stats.logprob)
    assert any(not torch.equal(p, old) for p, old in zip(agent.actor.parameters(), before))
    eps = torch.zeros(16, ACTION_DIM, dtype=torch.float64)
    with pytest.raises(ConfigError) as info:
        agent.actor_update(_batch(), eps)
    assert info.value.path == "sac.distribution"


def test_non_finite_observation_is_rejected():
    with pytest.raises(NonFiniteError):
        _agent().act(np.array([0.0, np.inf, 0.0, 0.0, 0.0]))


def test_acting():
    agent = _agent()
    obs = np.linspace(0.0, 1.0, OBS_DIM)
    a = agent.act(obs, deterministic=True)
    assert a.shape == (ACTION_DIM,) and a.dtype == np.float32
    np.testing.assert_array_equal(a, agent.act(obs, deterministic=True))
    sampled = [agent.act(obs) for _ in range(5)]
    assert all(np.all(np.abs(s) <= 1.0) for s in sampled)
    assert not np.array_equal(sampled[0], sampled[1])


def test_same_seed_same_agent():
    a, b = _agent(3), _agent(3)
    obs = np.full(OBS_DIM, 0.5)
    np.testing.assert_array_equal(a.act(obs), b.act(obs))
    for t in range(20):
        transition = Transition(np.full(OBS_DIM, t / 20), np.zeros(ACTION_DIM), float(t), np.full(OBS_DIM, 0.1), False)
        a.observe(transition)
        b.observe(transition)
    a.update()
    b.update()
    for pa, pb in zip(a.actor.parameters(), b.actor.parameters()):
        assert torch.equal(pa, pb)
    assert a.ready and not _agent().ready
