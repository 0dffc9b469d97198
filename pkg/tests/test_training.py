"""Reward assembly, GAE, PPO mechanics, and the optimizer."""

import numpy as np
import pytest

from routelab.errors import ConfigurationError, RuntimeFailure
from routelab.nn.autodiff import Tensor
from routelab.nn.optim import Adam, clip_grad_norm
from routelab.nn.params import ParamStore, orthogonal_init
from routelab.packetsim import PacketEnv
from routelab.packetsim.state import StepMetrics
from routelab.policies import NextHopPolicy
from routelab.scenarios import generate_scenario
from routelab.training import TrainConfig
from routelab.training.gae import gae_advantages
from routelab.training.ppo import decision_log_probs, ppo_losses, ppo_update
from routelab.training.rewards import compute_reward, fluid_reward


def test_reward_composite_oracle():
    m = StepMetrics(goodput_mb=2.0, drop_ratio=0.1, avg_delay_ms=20.0)
    assert compute_reward(m, "rda") == pytest.approx(2.0 - 5 * 0.020 - 0.25 * 0.1)
    assert compute_reward(m, "r") == pytest.approx(2.0)
    assert compute_reward(m, "d") == pytest.approx(-0.025)
    assert compute_reward(m, "a") == pytest.approx(-0.1)
    with pytest.raises(ConfigurationError):
        compute_reward(m, "xyz")


def test_reward_idle_step_is_zero():
    m = StepMetrics()
    for objective in ("r", "d", "a", "l", "rd", "ra", "rda"):
        assert compute_reward(m, objective) == 0.0


def test_fluid_reward_sign():
    assert fluid_reward(0.6) == -0.6
    assert fluid_reward(0.0) == 0.0


def test_gae_trivial_cases():
    adv, ret = gae_advantages([1.0], [0.0], 0.99, 0.95)
    np.testing.assert_allclose(adv, [1.0])
    np.testing.assert_allclose(ret, [1.0])
    adv, ret = gae_advantages([0.0, 0.0], [0.0, 0.0], 0.99, 0.95)
    np.testing.assert_allclose(adv, [0.0, 0.0])


def test_gae_hand_unrolled_trace():
    # gamma = lambda = 0.5; rewards [1, 0, 2], values [0.5, 0.25, 0.25]
    # deltas: d2 = 2 - 0.25 = 1.75
    #         d1 = 0 + 0.5*0.25 - 0.25 = -0.125
    #         d0 = 1 + 0.5*0.25 - 0.5 = 0.625
    # adv2 = 1.75; adv1 = -0.125 + 0.25*1.75 = 0.3125
    # adv0 = 0.625 + 0.25*0.3125 = 0.703125
    adv, ret = gae_advantages([1.0, 0.0, 2.0], [0.5, 0.25, 0.25], 0.5, 0.5)
    np.testing.assert_allclose(adv, [0.703125, 0.3125, 1.75])
    np.testing.assert_allclose(ret, [1.203125, 0.5625, 2.0])


def test_gae_bootstrap_value():
    adv, _ = gae_advantages([0.0], [0.0], 0.5, 0.5, bootstrap=2.0)
    np.testing.assert_allclose(adv, [1.0])


def test_ppo_losses_zero_advantage_keeps_policy_flat():
    d = 6
    logp = Tensor(np.full((d, 1), -1.0), requires_grad=True)
    value = Tensor(np.zeros((2, 1)), requires_grad=True)
    dgraph = np.array([0, 0, 0, 1, 1, 1])
    lp, lv = ppo_losses(logp, dgraph, value, np.full(d, -1.0), np.zeros(2),
                        np.zeros(2), np.ones(2), 0.2)
    (lp + lv).backward()
    np.testing.assert_allclose(logp.grad, np.zeros((d, 1)))
    assert np.abs(value.grad).max() > 0  # value still fits the returns


def test_ppo_losses_clip_blocks_large_ratios():
    # positive advantage, ratio already at 1.5: the clipped branch is
    # active, so the surrogate gradient vanishes
    logp = Tensor(np.array([[0.0]]), requires_grad=True)
    value = Tensor(np.zeros((1, 1)), requires_grad=True)
    old = np.array([np.log(1 / 1.5)])
    lp, lv = ppo_losses(logp, np.array([0]), value, old, np.zeros(1),
                        np.ones(1), np.zeros(1), 0.2)
    lp.backward()
    np.testing.assert_allclose(logp.grad, [[0.0]])
    # inside the trust region the gradient flows
    logp2 = Tensor(np.array([[0.0]]), requires_grad=True)
    lp2, _ = ppo_losses(logp2, np.array([0]), Tensor(np.zeros((1, 1))),
                        np.array([0.0]), np.zeros(1), np.ones(1),
                        np.zeros(1), 0.2)
    lp2.backward()
    assert abs(logp2.grad[0, 0]) > 0


def test_ppo_losses_rejects_flat_logp():
    bad = Tensor(np.zeros(4))
    with pytest.raises(RuntimeFailure):
        ppo_losses(bad, np.zeros(4, dtype=int), Tensor(np.zeros((1, 1))),
                   np.zeros(4), np.zeros(1), np.zeros(1), np.zeros(1), 0.2)


def rollout_mini(steps=4):
    scn = generate_scenario("nx-XS", 0, m_traffic=1.5, p_tcp=0.0)
    env = PacketEnv(scn)
    state = env.reset()
    pol = NextHopPolicy(np.random.default_rng(0))
    pol.begin_episode(scn.topology)
    rng = np.random.default_rng(1)
    inputs, actions = [], []
    for _ in range(steps):
        inp = pol.observe(state, training=True)
        act = pol.act(inp, "explore", rng)
        inputs.append(inp)
        actions.append(act)
        state, _ = env.step(act.table)
    return pol, inputs, actions


def test_decision_log_probs_match_rollout():
    pol, inputs, actions = rollout_mini()
    per_dec = decision_log_probs(pol, inputs, actions, chunk=2)
    assert len(per_dec) == len(inputs)
    for act, dec in zip(actions, per_dec):
        assert dec.sum() == pytest.approx(act.log_prob, abs=1e-9)


def test_ppo_update_moves_params_and_reports_losses():
    pol, inputs, actions = rollout_mini()
    opt = Adam(pol.store, lr=1e-3)
    before = pol.store.flat_values()
    n = len(inputs)
    stats = ppo_update(
        pol, opt, inputs, actions, old_value=np.zeros(n),
        advantages=np.ones(n), returns=np.ones(n), epochs=2, minibatch=2,
        clip_ratio=0.2, value_coef=0.5, grad_clip=0.5,
        rng=np.random.default_rng(2))
    after = pol.store.flat_values()
    assert set(stats) == {"loss_policy", "loss_value"}
    assert np.abs(after - before).max() > 0


def test_ppo_update_requires_divisible_minibatch():
    pol, inputs, actions = rollout_mini(steps=3)
    opt = Adam(pol.store, lr=1e-3)
    with pytest.raises(RuntimeFailure):
        ppo_update(pol, opt, inputs, actions, np.zeros(3), np.ones(3),
                   np.ones(3), 1, 2, 0.2, 0.5, 0.5, np.random.default_rng(0))


def test_train_config_validation():
    cfg = TrainConfig(policy="nexthop")
    assert cfg.lr > 0
    assert cfg.warm_start_iters == 5
    lw = TrainConfig(policy="linkweight")
    assert lw.warm_start_iters == 0
    assert lw.lr == pytest.approx(3e-3)
    with pytest.raises(ConfigurationError):
        TrainConfig(policy="ospf")
    with pytest.raises(ConfigurationError):
        TrainConfig(policy="nexthop", env="fluid")
    with pytest.raises(ConfigurationError):
        TrainConfig(policy="nexthop", env="river")


def test_adam_two_step_hand_trace():
    # single scalar parameter, constant gradient 1
    store = ParamStore()
    t = store.add("w", np.array([0.0]))
    opt = Adam(store, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8)
    for step in range(1, 3):
        t.grad = np.array([1.0])
        opt.step()
        m_hat = 1.0  # constant gradient: bias-corrected mean is exactly 1
        v_hat = 1.0
        # both moments bias-correct to 1, so each step moves by -lr/(1+eps)
    np.testing.assert_allclose(t.data, [-0.2 * (1.0 / (1.0 + 1e-8))], rtol=1e-9)


def test_adam_zero_grad_keeps_params():
    store = ParamStore()
    t = store.add("w", np.array([1.5]))
    opt = Adam(store, lr=0.1)
    t.grad = np.array([0.0])
    opt.step()
    np.testing.assert_allclose(t.data, [1.5])


def test_clip_grad_norm_rescales():
    store = ParamStore()
    a = store.add("a", np.zeros(3))
    b = store.add("b", np.zeros(4))
    a.grad = np.full(3, 3.0)
    b.grad = np.full(4, 4.0)
    norm = clip_grad_norm(store, 0.5)
    expected = np.sqrt(3 * 9.0 + 4 * 16.0)
    assert norm == pytest.approx(expected)
    total = np.sqrt((a.grad ** 2).sum() + (b.grad ** 2).sum())
    assert total == pytest.approx(0.5)
    # already-small gradients pass through untouched
    a.grad = np.full(3, 1e-3)
    b.grad = np.full(4, 1e-3)
    clip_grad_norm(store, 0.5)
    np.testing.assert_allclose(a.grad, np.full(3, 1e-3))


def test_orthogonal_init_properties():
    rng = np.random.default_rng(0)
    w = orthogonal_init(rng, (8, 8), gain=2.0)
    np.testing.assert_allclose(w.T @ w, 4.0 * np.eye(8), atol=1e-9)
    tall = orthogonal_init(rng, (12, 5), gain=1.0)
    np.testing.assert_allclose(tall.T @ tall, np.eye(5), atol=1e-9)


def test_param_store_save_load_round_trip(tmp_path):
    store = ParamStore()
    rng = np.random.default_rng(3)
    store.add("x", rng.normal(size=(4, 2)))
    store.add("y", rng.normal(size=(3,)))
    path = str(tmp_path / "params.npz")
    store.save(path)
    other = ParamStore()
    other.add("x", np.zeros((4, 2)))
    other.add("y", np.zeros(3))
    other.load(path)
    np.testing.assert_array_equal(other["x"].data, store["x"].data)
    np.testing.assert_array_equal(other["y"].data, store["y"].data)
