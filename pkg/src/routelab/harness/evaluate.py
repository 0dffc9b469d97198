"""Seed-paired evaluation of policies and baselines on the packet env.

Every approach in one report consumes the identical scenario sequence,
so per-episode metric arrays line up for paired comparisons. Learned
approaches run in deterministic greedy mode. The report separates
deterministic content (metrics, counters) from wall-clock timings so
repeated runs with the same seeds hash identically.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from ..baselines import BASELINE_KINDS, make_baseline
from ..errors import ConfigurationError
from ..packetsim.env import PacketEnv
from ..packetsim.state import EDGE_LU
from ..scenarios import generate_scenario
from ..training.rewards import compute_reward

EVAL_EPISODES = {"nx-XS": 100, "nx-S": 100, "nx-M": 100, "nx-L": 30, "nx-XL": 30}
METRIC_KEYS = ("goodput_mb", "drop_ratio", "avg_delay_ms", "avg_jitter_ms",
               "max_lu", "reward")


@dataclass
class EvalConfig:
    preset: str = "nx-XS"
    m_traffic: float = 1.5
    p_tcp: float = 0.5
    link_failures: bool = False
    objective: str = "rda"
    n_episodes: int = 0
    horizon: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_episodes == 0:
            if self.preset not in EVAL_EPISODES:
                raise ConfigurationError(f"unknown preset: {self.preset}")
            self.n_episodes = EVAL_EPISODES[self.preset]


def episode_seeds(config: EvalConfig) -> list:
    """Scenario seeds shared by every approach in one report."""
    return [int(np.random.default_rng([config.seed, 9002, i]).integers(0, 2**31 - 1))
            for i in range(config.n_episodes)]


class BaselineApproach:
    """Routing baseline behind the common begin/step interface."""

    def __init__(self, kind: str, rng_seed: int = 0):
        if kind not in BASELINE_KINDS:
            raise ConfigurationError(f"unknown baseline kind: {kind}")
        self.kind = kind
        self.rng_seed = rng_seed
        self.inner = None

    def begin_episode(self, topology, episode_index: int) -> None:
        rng = np.random.default_rng([self.rng_seed, 751, episode_index])
        self.inner = make_baseline(self.kind, rng)
        self.inner.begin_episode(topology)

    def step(self, state) -> np.ndarray:
        return self.inner.act(state.edges, state.topology_changed)

    def apsp_count(self) -> int:
        return getattr(self.inner, "recompute_count", 0)


class PolicyApproach:
    """Trained policy in greedy mode behind the common interface."""

    def __init__(self, policy, kind: str):
        self.policy = policy
        self.kind = kind

    def begin_episode(self, topology, episode_index: int) -> None:
        self.policy.begin_episode(topology)

    def step(self, state) -> np.ndarray:
        if self.kind == "nexthop":
            inp = self.policy.observe(state, training=False)
            return self.policy.act(inp, "greedy").table
        inp = self.policy.observe(state.edges, state.edge_features[:, EDGE_LU],
                                  training=False)
        act = self.policy.act(inp, "greedy")
        table = self.policy.to_routing_table(inp, act)
        self.policy.commit_weights(inp, act)
        return table

    def apsp_count(self) -> int:
        return self.policy.apsp_count


def table_change_fraction(prev: np.ndarray, cur: np.ndarray) -> float:
    """Fraction of off-diagonal next-hop entries that differ."""
    n = prev.shape[0]
    off = ~np.eye(n, dtype=bool)
    return float(np.mean(prev[off] != cur[off]))


def run_episode(approach, config: EvalConfig, scenario_seed: int,
                episode_index: int) -> tuple:
    """One greedy episode; per-step metric means plus instrumentation."""
    scenario = generate_scenario(
        config.preset, scenario_seed, m_traffic=config.m_traffic,
        p_tcp=config.p_tcp, link_failures=config.link_failures)
    env = PacketEnv(scenario, config.horizon)
    state = env.reset()
    approach.begin_episode(scenario.topology, episode_index)
    apsp_before = approach.apsp_count()
    acc = {k: 0.0 for k in METRIC_KEYS}
    step_times = []
    fluctuation = []
    prev_table = None
    for _ in range(config.horizon):
        t0 = time.perf_counter()
        table = approach.step(state)
        step_times.append(time.perf_counter() - t0)
        if prev_table is not None:
            fluctuation.append(table_change_fraction(prev_table, table))
        prev_table = table
        state, metrics = env.step(table)
        acc["goodput_mb"] += metrics.goodput_mb
        acc["drop_ratio"] += metrics.drop_ratio
        acc["avg_delay_ms"] += metrics.avg_delay_ms
        acc["avg_jitter_ms"] += metrics.avg_jitter_ms
        acc["max_lu"] += metrics.max_lu
        acc["reward"] += compute_reward(metrics, config.objective)
    means = {k: acc[k] / config.horizon for k in METRIC_KEYS}
    means["action_fluctuation"] = float(np.mean(fluctuation))
    apsp = approach.apsp_count() - apsp_before
    return means, apsp, step_times


def evaluate_approaches(config: EvalConfig, approaches: dict,
                        groups: dict = None) -> tuple:
    """Evaluate every approach on the shared episode list.

    Returns (report, timings): the report holds deterministic content
    only; per-step wall-clock statistics land in the timings dict.
    groups maps a label to member approach names and adds mean/min/max
    aggregation over member means plus a better-half selection.
    """
    seeds = episode_seeds(config)
    report = {
        "config": asdict(config),
        "episode_seeds": seeds,
        "approaches": {},
        "relative_to_eigrp": {},
        "groups": {},
    }
    timings = {}
    for name, approach in approaches.items():
        per_episode = {k: [] for k in METRIC_KEYS}
        per_episode["action_fluctuation"] = []
        apsp_counts = []
        all_times = []
        for i, s in enumerate(seeds):
            means, apsp, step_times = run_episode(approach, config, s, i)
            for k in per_episode:
                per_episode[k].append(means[k])
            apsp_counts.append(apsp)
            all_times.extend(step_times)
        entry = {
            "episodes": per_episode,
            "mean": {k: float(np.mean(v)) for k, v in per_episode.items()},
            "apsp_per_episode": float(np.mean(apsp_counts)),
        }
        report["approaches"][name] = entry
        times = np.array(all_times)
        timings[name] = {
            "mean_step_s": float(times.mean()),
            "p95_step_s": float(np.percentile(times, 95)),
        }
    if "eigrp" in report["approaches"]:
        base = report["approaches"]["eigrp"]["mean"]
        for name, entry in report["approaches"].items():
            rel = {}
            for k, v in entry["mean"].items():
                rel[k] = v / base[k] if base[k] != 0.0 else None
            report["relative_to_eigrp"][name] = rel
    for label, members in (groups or {}).items():
        missing = [m for m in members if m not in report["approaches"]]
        if missing:
            raise ConfigurationError(f"group {label} names unknown approaches: "
                                     f"{missing}")
        member_means = {m: report["approaches"][m]["mean"] for m in members}
        ranked = sorted(members,
                        key=lambda m: member_means[m]["goodput_mb"],
                        reverse=True)
        best_half = ranked[:max(1, len(members) // 2)]
        agg = {}
        for k in list(member_means[members[0]].keys()):
            vals = [member_means[m][k] for m in members]
            agg[k] = {"mean": float(np.mean(vals)),
                      "min": float(np.min(vals)),
                      "max": float(np.max(vals))}
        best = {k: float(np.mean([member_means[m][k] for m in best_half]))
                for k in member_means[members[0]]}
        report["groups"][label] = {
            "members": list(members),
            "best_half": best_half,
            "all_seeds": agg,
            "best_half_mean": best,
        }
    return report, timings


def pooled_episode_metric(report: dict, names: list, metric: str) -> np.ndarray:
    """Per-episode metric averaged across the named approaches.

    Episode alignment is guaranteed by the shared seed list, so the
    row-wise mean pairs with any other approach's episodes.
    """
    rows = [report["approaches"][n]["episodes"][metric] for n in names]
    return np.mean(np.array(rows, dtype=np.float64), axis=0)
