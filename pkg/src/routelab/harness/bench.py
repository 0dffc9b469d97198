"""Per-step inference timing across topology presets.

Times the policy's observe/act path against a frozen initial network
state, so simulation cost is excluded by construction while shapes and
counters match a live failure-free episode: the next-hop policy runs
its all-pairs pass once per episode, the link-weight policy once per
step. Timing is architecture-bound, so randomly initialized parameters
measure the same thing as trained ones.
"""

from __future__ import annotations

import time

import numpy as np

from ..errors import ConfigurationError
from ..packetsim.env import PacketEnv
from ..packetsim.state import EDGE_LU
from ..scenarios import generate_scenario
from ..training.loop import POLICY_KINDS, make_policy

BENCH_PRESETS = ("nx-XS", "nx-S", "nx-M", "nx-L")


def _frozen_episode(policy, kind: str, state, steps: int) -> tuple:
    """Replay one state through the inference path; per-step seconds."""
    times = []
    apsp_before = policy.apsp_count
    for _ in range(steps):
        t0 = time.perf_counter()
        if kind == "nexthop":
            inp = policy.observe(state, training=False)
            policy.act(inp, "greedy")
        else:
            inp = policy.observe(state.edges, state.edge_features[:, EDGE_LU],
                                 training=False)
            act = policy.act(inp, "greedy")
            policy.to_routing_table(inp, act)
            policy.commit_weights(inp, act)
        times.append(time.perf_counter() - t0)
    return times, policy.apsp_count - apsp_before


def bench_inference(kind: str, presets=BENCH_PRESETS, n_episodes: int = 30,
                    steps: int = 100, seed: int = 0) -> dict:
    """Timing table for one policy kind across presets.

    Each episode draws a fresh topology, replays its initial state for
    the given number of steps, and reports mean/p95 per-step seconds
    plus the all-pairs-shortest-path calls per step.
    """
    if kind not in POLICY_KINDS:
        raise ConfigurationError(f"unknown policy kind: {kind}")
    table = {"policy": kind, "n_episodes": n_episodes, "steps": steps,
             "presets": {}}
    for preset in presets:
        policy = make_policy(kind, seed)
        all_times = []
        apsp_total = 0
        n_nodes = []
        for ep in range(n_episodes):
            s = int(np.random.default_rng([seed, 9003, ep]).integers(0, 2**31 - 1))
            scenario = generate_scenario(preset, s, m_traffic=0.25, p_tcp=0.0)
            state = PacketEnv(scenario, steps).reset()
            policy.begin_episode(scenario.topology)
            times, apsp = _frozen_episode(policy, kind, state, steps)
            all_times.extend(times)
            apsp_total += apsp
            n_nodes.append(scenario.topology.n_nodes)
        arr = np.array(all_times)
        table["presets"][preset] = {
            "mean_step_s": float(arr.mean()),
            "p95_step_s": float(np.percentile(arr, 95)),
            "apsp_per_step": apsp_total / (n_episodes * steps),
            "apsp_per_episode": apsp_total / n_episodes,
            "mean_nodes": float(np.mean(n_nodes)),
        }
    return table
