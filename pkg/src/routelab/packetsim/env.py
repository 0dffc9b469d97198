"""Episode environment over the packet simulator.

Drives one scenario for H control steps. Each step: apply this step's
link failures (tearing down buffers), install the next-hop table, inject
the demands arriving in the step's window, simulate for the step
duration, and emit the monitoring snapshot plus step metrics.
"""

from __future__ import annotations

import numpy as np

from ..scenarios.scenario import NetworkScenario
from .core import PacketSimulator
from .state import (
    N_EDGE_FEATURES,
    N_GLOBAL_FEATURES,
    NetworkState,
    StepMetrics,
)


class PacketEnv:
    """Gym-style loop: reset() -> S0; step(action) -> (state, metrics)."""

    def __init__(
        self,
        scenario: NetworkScenario,
        horizon_steps: int = 100,
        tau_ms: float = 5.0,
        hash_trace: bool = False,
        track_sent_pairs: bool = False,
    ):
        self.scenario = scenario
        self.horizon = horizon_steps
        self.tau_ms = tau_ms
        self.hash_trace = hash_trace
        self.track_sent_pairs = track_sent_pairs
        self.sim: PacketSimulator | None = None
        self.t = 0
        self._demands_by_step: list[list] = []
        self._failures_by_step: list[list] = []

    def reset(self) -> NetworkState:
        self.sim = PacketSimulator(
            self.scenario.topology, tau_ms=self.tau_ms, hash_trace=self.hash_trace
        )
        self.sim.track_sent_pairs = self.track_sent_pairs
        self.t = 0
        self._demands_by_step = [[] for _ in range(self.horizon)]
        for d in self.scenario.demands:
            idx = int(d.t_ms // self.tau_ms)
            if 0 <= idx < self.horizon:
                self._demands_by_step[idx].append(d)
        self._failures_by_step = [[] for _ in range(self.horizon)]
        for f in self.scenario.failures:
            if 0 <= f.step < self.horizon:
                self._failures_by_step[f.step].append((f.u, f.v))
        return self._initial_state()

    def step(self, action: np.ndarray) -> tuple[NetworkState, StepMetrics]:
        """Advance one control step under the given next-hop table."""
        sim = self.sim
        t = self.t
        sim.reset_step_counters()
        failures = self._failures_by_step[t]
        for u, v in failures:
            sim.fail_link(u, v)
        sim.install_action(action)
        for d in self._demands_by_step[t]:
            sim.schedule_demand(d)
        sim.run_until((t + 1) * sim.tau_ns)
        self.t = t + 1
        state = self._collect_state(topology_changed=bool(failures))
        metrics = self._collect_metrics(state)
        return state, metrics

    @property
    def done(self) -> bool:
        return self.t >= self.horizon

    def surviving_edges(self) -> list[tuple[int, int]]:
        return sorted(e for e, dl in self.sim.links.items() if dl.alive)

    def conservation(self) -> tuple[int, int, int, int]:
        """(injected, delivered, dropped, residual) episode packet counts."""
        sim = self.sim
        return sim.injected, sim.delivered, sim.dropped, sim.residual_packets()

    def _initial_state(self) -> NetworkState:
        edges = self.surviving_edges()
        sim = self.sim
        feats = np.zeros((len(edges), N_EDGE_FEATURES))
        for i, e in enumerate(edges):
            dl = sim.links[e]
            feats[i, 3] = dl.capacity
            feats[i, 4] = dl.rate_bps
            feats[i, 5] = dl.delay_ns * 1e-6
        return NetworkState(
            n_nodes=sim.n,
            edges=edges,
            edge_features=feats,
            global_features=np.zeros(N_GLOBAL_FEATURES),
            topology_changed=False,
        )

    def _collect_state(self, topology_changed: bool) -> NetworkState:
        sim = self.sim
        edges = self.surviving_edges()
        feats = np.zeros((len(edges), N_EDGE_FEATURES))
        for i, e in enumerate(edges):
            dl = sim.links[e]
            cap = dl.capacity
            feats[i, 0] = min(dl.ser_bytes / dl.step_cap_bytes, 1.0)
            feats[i, 1] = min(dl.max_fill / cap, 1.0) if cap > 0 else 0.0
            feats[i, 2] = min(dl.queued_bytes / cap, 1.0) if cap > 0 else 0.0
            feats[i, 3] = cap
            feats[i, 4] = dl.rate_bps
            feats[i, 5] = dl.delay_ns * 1e-6
            feats[i, 6] = dl.ser_bytes
            feats[i, 7] = dl.recv_bytes
            feats[i, 8] = dl.drop_bytes
            feats[i, 9] = dl.drop_pkts
        lu = feats[:, 0]
        avg_delay = sim.delay_sum / sim.delay_n if sim.delay_n else 0.0
        avg_jitter = sim.jitter_sum / sim.jitter_n if sim.jitter_n else 0.0
        glob = np.array(
            [
                float(lu.max()) if len(lu) else 0.0,
                float(lu.mean()) if len(lu) else 0.0,
                avg_delay,
                sim.delay_max,
                avg_jitter,
                float(sim.sent_payload),
                float(sim.recv_payload),
                float(sim.drop_payload),
                float(sim.retx_payload),
            ]
        )
        return NetworkState(
            n_nodes=sim.n,
            edges=edges,
            edge_features=feats,
            global_features=glob,
            topology_changed=topology_changed,
        )

    def _collect_metrics(self, state: NetworkState) -> StepMetrics:
        sim = self.sim
        g = state.global_features
        received = sim.recv_payload
        dropped = sim.drop_payload
        denom = received + dropped
        sent_matrix = None
        if self.track_sent_pairs:
            sent_matrix = np.zeros((sim.n, sim.n))
            for (i, j), b in sim.sent_pairs.items():
                sent_matrix[i, j] = b
        return StepMetrics(
            goodput_mb=received / 1e6,
            avg_delay_ms=float(g[2]),
            max_delay_ms=float(g[3]),
            avg_jitter_ms=float(g[4]),
            drop_ratio=dropped / denom if denom else 0.0,
            max_lu=float(g[0]),
            sent_bytes=sim.sent_payload,
            received_bytes=received,
            dropped_bytes=dropped,
            retransmitted_bytes=sim.retx_payload,
            injected_packets=sim.step_injected,
            delivered_packets=sim.step_delivered,
            dropped_packets=sim.step_dropped,
            sent_matrix=sent_matrix,
        )
