"""Fluid flow-network environment.

An intentionally idealized abstraction: per step, a traffic matrix of
volumes is routed wholly along shortest paths under the current link
weights, and the only observable is per-edge link utilization. There is
no queueing, no drops, no delay; traffic demands drain at their nominal
sending rates regardless of congestion. Training against this model and
evaluating in the packet simulator exposes the fidelity gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .routing import floyd_warshall, next_hops_from_distances
from .scenarios.scenario import NetworkScenario

NOMINAL_FAST_RATE_BPS = 1e9   # TCP and small-UDP demands drain at this rate


@dataclass
class FluidState:
    """Per-step fluid observation: utilization per surviving directed edge."""

    n_nodes: int
    edges: list[tuple[int, int]]
    lu: np.ndarray
    topology_changed: bool = False


def fluid_step(
    topology,
    tm: np.ndarray,
    weights: dict,
    tau_ms: float = 5.0,
    failed=frozenset(),
) -> tuple[list[tuple[int, int]], np.ndarray, float]:
    """Route a traffic matrix along weighted shortest paths.

    Every (i, j) volume follows the tie-broken shortest path; edge load is
    the sum of traversing volumes and LU divides by the per-step byte
    capacity, deliberately NOT clamped at 1 so overload stays visible.
    Returns (sorted surviving directed edges, LU per edge, max LU).
    """
    n = topology.n_nodes
    dist = floyd_warshall(n, weights)
    table = next_hops_from_distances(n, weights, dist)
    edges = topology.directed_edges(failed)
    index = {e: k for k, e in enumerate(edges)}
    load = np.zeros(len(edges))
    for i in range(n):
        row = tm[i]
        for j in range(n):
            vol = row[j]
            if vol <= 0.0 or i == j:
                continue
            u = i
            while u != j:
                v = int(table[u, j])
                if v < 0:
                    break
                load[index[(u, v)]] += vol
                u = v
    tau_s = tau_ms / 1000.0
    caps = np.array([topology.link_between(u, v).datarate_bps * tau_s / 8.0 for u, v in edges])
    lu = load / caps
    max_lu = float(lu.max()) if len(lu) else 0.0
    return edges, lu, max_lu


def tm_from_step(sent_pairs: dict, n: int) -> np.ndarray:
    """Traffic matrix of bytes sent per ordered pair during one step."""
    tm = np.zeros((n, n))
    for (i, j), b in sent_pairs.items():
        tm[i, j] += b
    return tm


class FluidEnv:
    """Episode loop over the fluid model, driven by scenario demands.

    Demands drain at nominal rates (rate-limited UDP at its configured
    rate, everything else at 1 Gbit/s) from their arrival time until
    their volume is exhausted; the per-step traffic matrix collects those
    drained volumes. step() takes link weights and returns the fluid
    observation plus the max-LU value used for the training penalty.
    """

    def __init__(self, scenario: NetworkScenario, horizon_steps: int = 100, tau_ms: float = 5.0):
        self.scenario = scenario
        self.horizon = horizon_steps
        self.tau_ms = tau_ms
        self.t = 0
        self._remaining: list[float] = []
        self._rates: list[float] = []
        self._active: list[int] = []
        self._next_demand = 0
        self._failed: set[tuple[int, int]] = set()
        self._failures_by_step: list[list[tuple[int, int]]] = []

    def reset(self) -> FluidState:
        self.t = 0
        self._remaining = [float(d.size_bytes) for d in self.scenario.demands]
        self._rates = [
            d.udp_rate_bps if (d.kind == "UDP" and d.udp_rate_bps < NOMINAL_FAST_RATE_BPS)
            else NOMINAL_FAST_RATE_BPS
            for d in self.scenario.demands
        ]
        self._active = []
        self._next_demand = 0
        self._failed = set()
        self._failures_by_step = [[] for _ in range(self.horizon)]
        for f in self.scenario.failures:
            if 0 <= f.step < self.horizon:
                self._failures_by_step[f.step].append((f.u, f.v))
        edges = self.scenario.topology.directed_edges()
        return FluidState(
            n_nodes=self.scenario.topology.n_nodes,
            edges=edges,
            lu=np.zeros(len(edges)),
            topology_changed=False,
        )

    def step_tm(self, step: int) -> np.ndarray:
        """Traffic matrix of volumes drained during the given step."""
        n = self.scenario.topology.n_nodes
        demands = self.scenario.demands
        tm = np.zeros((n, n))
        start_ms = step * self.tau_ms
        end_ms = (step + 1) * self.tau_ms
        while self._next_demand < len(demands) and demands[self._next_demand].t_ms < end_ms:
            self._active.append(self._next_demand)
            self._next_demand += 1
        still_active = []
        for k in self._active:
            d = demands[k]
            rem = self._remaining[k]
            active_ms = end_ms - max(start_ms, d.t_ms)
            vol = min(rem, self._rates[k] * active_ms / 8e3)
            self._remaining[k] = rem - vol
            tm[d.src, d.dst] += vol
            if rem > vol:
                still_active.append(k)
        self._active = still_active
        return tm

    def step(self, weights: dict) -> tuple[FluidState, float]:
        failures = self._failures_by_step[self.t]
        for pair in failures:
            self._failed.add(pair)
        tm = self.step_tm(self.t)
        live_weights = {
            e: w
            for e, w in weights.items()
            if e not in self._failed and (e[1], e[0]) not in self._failed
        }
        edges, lu, max_lu = fluid_step(
            self.scenario.topology, tm, live_weights, tau_ms=self.tau_ms, failed=self._failed
        )
        self.t += 1
        state = FluidState(
            n_nodes=self.scenario.topology.n_nodes,
            edges=edges,
            lu=lu,
            topology_changed=bool(failures),
        )
        return state, max_lu

    @property
    def done(self) -> bool:
        return self.t >= self.horizon
