"""Iteration loop: rollouts, advantage estimation, updates, curves.

Each iteration generates fresh scenarios (new topology, traffic, and
failures per episode), collects 16 episodes of 100 transitions with the
exploring policy, and runs the clipped-surrogate update phase. The
next-hop policy's first iterations can imitate the EIGRP baseline by
substituting its tables for the sampled actions and scoring them under
the current policy. Results land in a per-run directory: learning-curve
CSV plus best/final checkpoints; a content-keyed cache lets repeated
runs with identical configs reuse finished results.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from ..baselines import ProtocolBaseline
from ..errors import ConfigurationError, RuntimeFailure
from ..fluidsim import FluidEnv
from ..nn import no_grad
from ..nn.optim import Adam
from ..packetsim.env import PacketEnv
from ..packetsim.state import EDGE_LU
from ..policies import LinkWeightPolicy, NextHopPolicy
from ..scenarios import generate_scenario
from .gae import gae_advantages
from .ppo import ppo_update
from .rewards import compute_reward, fluid_reward, objective_weights

POLICY_KINDS = ("nexthop", "linkweight")
DEFAULT_LR = {"nexthop": 1e-3, "linkweight": 3e-3}
DEFAULT_WARM_START = {"nexthop": 5, "linkweight": 0}
CURVE_COLUMNS = ("iteration", "mean_reward", "mean_goodput", "mean_drop_ratio",
                 "mean_avg_delay", "loss_policy", "loss_value")


@dataclass
class TrainConfig:
    policy: str
    env: str = "packet"
    preset: str = "nx-XS"
    m_traffic: float = 1.5
    p_tcp: float = 0.5
    objective: str = "rda"
    link_failures: bool = False
    iterations: int = 100
    episodes_per_iter: int = 16
    horizon: int = 100
    epochs: int = 10
    minibatch: int = 400
    clip_ratio: float = 0.2
    value_coef: float = 0.5
    grad_clip: float = 0.5
    gamma: float = 0.99
    gae_lambda: float = 0.95
    lr: float = 0.0
    warm_start_iters: int = -1
    seed: int = 0

    def __post_init__(self):
        if self.policy not in POLICY_KINDS:
            raise ConfigurationError(f"unknown policy kind: {self.policy}")
        if self.env not in ("packet", "fluid"):
            raise ConfigurationError(f"unknown environment: {self.env}")
        if self.env == "fluid":
            if self.policy != "linkweight":
                raise ConfigurationError(
                    "the fluid environment supports only the linkweight policy")
            if self.objective != "l":
                raise ConfigurationError(
                    "fluid training optimizes the utilization objective 'l'")
        objective_weights(self.objective)
        if (self.episodes_per_iter * self.horizon) % self.minibatch != 0:
            raise ConfigurationError("minibatch must divide episodes*horizon")
        if self.lr == 0.0:
            self.lr = DEFAULT_LR[self.policy]
        if self.warm_start_iters < 0:
            self.warm_start_iters = DEFAULT_WARM_START[self.policy]
        if self.warm_start_iters and self.policy != "nexthop":
            raise ConfigurationError("warm start applies to the nexthop policy")


def _derived_seed(*parts) -> int:
    return int(np.random.default_rng(list(parts)).integers(0, 2**31 - 1))


def make_policy(kind: str, seed: int):
    rng = np.random.default_rng([seed, 977])
    if kind == "nexthop":
        return NextHopPolicy(rng)
    if kind == "linkweight":
        return LinkWeightPolicy(rng)
    raise ConfigurationError(f"unknown policy kind: {kind}")


def architecture_hash(kind: str, policy) -> str:
    spec = {
        "kind": kind,
        "n_frames": policy.n_frames,
        "params": [[name, list(policy.store[name].data.shape)]
                   for name in policy.store.names()],
    }
    return hashlib.md5(json.dumps(spec, sort_keys=True).encode()).hexdigest()


def save_checkpoint(policy, kind: str, path: str) -> None:
    blob = {name: policy.store[name].data for name in policy.store.names()}
    for k, v in policy.normalizer_state().items():
        blob[f"__{k}__"] = v
    blob["__kind__"] = np.array(kind)
    blob["__arch__"] = np.array(architecture_hash(kind, policy))
    np.savez(path, **blob)


def load_checkpoint(path: str):
    """Rebuild a policy of the stored kind with stored parameters."""
    with np.load(path) as blob:
        kind = str(blob["__kind__"])
        policy = make_policy(kind, 0)
        if str(blob["__arch__"]) != architecture_hash(kind, policy):
            raise ConfigurationError("checkpoint does not match this architecture")
        norm_state = {}
        for key in blob.files:
            if key.startswith("__norm_"):
                norm_state[key.strip("_")] = blob[key]
            elif not key.startswith("__"):
                policy.store[key].data = blob[key].astype(np.float64)
        policy.load_normalizer_state(norm_state)
    return policy, kind


def rollout_episode(policy, kind: str, config: TrainConfig, scenario,
                    explore_rng: np.random.Generator, warm: bool,
                    training: bool = True):
    """One exploring episode; returns transitions plus metric means."""
    inputs, actions, rewards, values = [], [], [], []
    goodput, drops, delays = [], [], []
    policy.begin_episode(scenario.topology)
    if config.env == "fluid":
        env = FluidEnv(scenario, config.horizon)
        state = env.reset()
        inp = policy.observe(state.edges, state.lu, training)
        for t in range(config.horizon):
            with no_grad():
                act = policy.act(inp, "explore", explore_rng)
                val = policy.value(inp)
            state, max_lu = env.step(act.weight_map(inp.edges))
            policy.commit_weights(inp, act)
            inputs.append(inp)
            actions.append(act)
            rewards.append(fluid_reward(max_lu))
            values.append(val)
            if t < config.horizon - 1:
                inp = policy.observe(state.edges, state.lu, training)
        return inputs, actions, np.array(rewards), np.array(values), (0.0, 0.0, 0.0)

    env = PacketEnv(scenario, config.horizon)
    state = env.reset()
    baseline = None
    if warm:
        baseline = ProtocolBaseline("eigrp")
        baseline.begin_episode(scenario.topology)
    if kind == "nexthop":
        inp = policy.observe(state, training)
    else:
        inp = policy.observe(state.edges, state.edge_features[:, EDGE_LU], training)
    for t in range(config.horizon):
        with no_grad():
            if warm:
                table = baseline.act(state.edges, state.topology_changed)
                act = policy.action_from_table(inp, table)
            elif kind == "nexthop":
                act = policy.act(inp, "explore", explore_rng)
                table = act.table
            else:
                act = policy.act(inp, "explore", explore_rng)
                table = policy.to_routing_table(inp, act)
            val = policy.value(inp)
        state, metrics = env.step(table)
        if kind == "linkweight":
            policy.commit_weights(inp, act)
        inputs.append(inp)
        actions.append(act)
        rewards.append(compute_reward(metrics, config.objective))
        values.append(val)
        goodput.append(metrics.goodput_mb)
        drops.append(metrics.drop_ratio)
        delays.append(metrics.avg_delay_ms)
        if t < config.horizon - 1:
            if kind == "nexthop":
                inp = policy.observe(state, training)
            else:
                inp = policy.observe(state.edges, state.edge_features[:, EDGE_LU],
                                     training)
    stats = (float(np.mean(goodput)), float(np.mean(drops)), float(np.mean(delays)))
    return inputs, actions, np.array(rewards), np.array(values), stats


def train(config: TrainConfig, out_dir: str) -> dict:
    """Full training run; writes curve.csv and checkpoints into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    policy = make_policy(config.policy, config.seed)
    optimizer = Adam(policy.store, lr=config.lr)
    curve = []
    best_reward = -np.inf
    best_path = os.path.join(out_dir, "checkpoint_best.npz")
    final_path = os.path.join(out_dir, "checkpoint_final.npz")
    for it in range(config.iterations):
        warm = config.policy == "nexthop" and it < config.warm_start_iters
        all_inputs, all_actions = [], []
        all_rewards, all_values, all_adv, all_ret = [], [], [], []
        ep_stats = []
        for ep in range(config.episodes_per_iter):
            scenario_seed = _derived_seed(config.seed, 101, it, ep)
            scenario = generate_scenario(
                config.preset, scenario_seed, m_traffic=config.m_traffic,
                p_tcp=config.p_tcp, link_failures=config.link_failures)
            explore_rng = np.random.default_rng([config.seed, 11, it, ep])
            inputs, actions, rewards, values, stats = rollout_episode(
                policy, config.policy, config, scenario, explore_rng, warm)
            adv, ret = gae_advantages(rewards, values, config.gamma,
                                      config.gae_lambda)
            all_inputs.extend(inputs)
            all_actions.extend(actions)
            all_rewards.append(rewards)
            all_values.append(values)
            all_adv.append(adv)
            all_ret.append(ret)
            ep_stats.append(stats)
        rewards = np.concatenate(all_rewards)
        values = np.concatenate(all_values)
        advantages = np.concatenate(all_adv)
        returns = np.concatenate(all_ret)
        update_rng = np.random.default_rng([config.seed, 29, it])
        stats = ppo_update(
            policy, optimizer, all_inputs, all_actions, values,
            advantages, returns, config.epochs, config.minibatch,
            config.clip_ratio, config.value_coef, config.grad_clip, update_rng)
        mean_reward = float(rewards.mean())
        row = {
            "iteration": it + 1,
            "mean_reward": mean_reward,
            "mean_goodput": float(np.mean([s[0] for s in ep_stats])),
            "mean_drop_ratio": float(np.mean([s[1] for s in ep_stats])),
            "mean_avg_delay": float(np.mean([s[2] for s in ep_stats])),
            "loss_policy": stats["loss_policy"],
            "loss_value": stats["loss_value"],
        }
        curve.append(row)
        if mean_reward > best_reward:
            best_reward = mean_reward
            save_checkpoint(policy, config.policy, best_path)
    save_checkpoint(policy, config.policy, final_path)
    write_curve(curve, os.path.join(out_dir, "curve.csv"))
    return {
        "curve": curve,
        "best_path": best_path,
        "final_path": final_path,
        "out_dir": out_dir,
    }


def write_curve(curve: list, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for row in curve:
            writer.writerow([row["iteration"]] +
                            [format(row[c], ".6g") for c in CURVE_COLUMNS[1:]])


def read_curve(path: str) -> list:
    rows = []
    with open(path) as fh:
        for rec in csv.DictReader(fh):
            row = {"iteration": int(rec["iteration"])}
            for c in CURVE_COLUMNS[1:]:
                row[c] = float(rec[c])
            rows.append(row)
    return rows


def config_hash(config: TrainConfig) -> str:
    return hashlib.md5(
        json.dumps(asdict(config), sort_keys=True).encode()).hexdigest()


def default_cache_root() -> str:
    env = os.environ.get("ROUTELAB_CACHE")
    if env:
        return env
    return os.path.join(os.path.expanduser("~"), ".cache", "routelab")


def train_cached(config: TrainConfig, cache_root: str = None) -> dict:
    """Train once per distinct config; later calls reuse the artifacts.

    Determinism makes the cache transparent: a hit returns exactly what
    rerunning would produce.
    """
    root = cache_root or default_cache_root()
    out_dir = os.path.join(root, config_hash(config))
    done = os.path.join(out_dir, "DONE")
    curve_path = os.path.join(out_dir, "curve.csv")
    if os.path.exists(done) and os.path.exists(curve_path):
        return {
            "curve": read_curve(curve_path),
            "best_path": os.path.join(out_dir, "checkpoint_best.npz"),
            "final_path": os.path.join(out_dir, "checkpoint_final.npz"),
            "out_dir": out_dir,
        }
    result = train(config, out_dir)
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(asdict(config), fh, indent=2, sort_keys=True)
    with open(done, "w") as fh:
        fh.write("ok\n")
    return result
