"""Learned link-weight routing policy on the line digraph.

Every directed network edge becomes a node of a derived digraph whose
arcs join consecutive edges; message passing runs there. Each line-node
carries a short history of (utilization, previously applied weight)
pairs. The head emits one raw score per edge; softplus maps it to a
positive weight, and shortest paths under those weights produce the
routing table. Exploration perturbs the raw score with diagonal
Gaussian noise whose log-density is tracked in that raw space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import RuntimeFailure
from ..nn import (
    GraphBatch,
    MessagePassingCore,
    MLP2,
    ParamStore,
    Tensor,
    exp,
    mul,
    neg,
    reshape,
    segment_mean,
)
from ..routing import line_digraph, weights_to_action
from .observe import N_FRAMES, FrameStack, RunningNorm

N_BASE_FEATURES = 2
INITIAL_SIGMA = 1.0
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class LinkWeightInput:
    """One step's line-digraph batch; line-nodes follow edge order."""

    batch: GraphBatch
    edges: list

    @property
    def n_edges(self) -> int:
        return len(self.edges)


@dataclass
class LinkWeightAction:
    """Raw pre-softplus sample with the induced positive weights."""

    raw: np.ndarray
    weights: np.ndarray
    log_prob: float

    def weight_map(self, edges: list) -> dict:
        return {e: float(w) for e, w in zip(edges, self.weights)}


class LinkWeightPolicy:
    """Actor-critic pair over the line digraph of surviving edges."""

    def __init__(self, rng: np.random.Generator, n_frames: int = N_FRAMES):
        self.n_frames = n_frames
        self.d_node = N_BASE_FEATURES * n_frames
        self.store = ParamStore()
        self.actor_core = MessagePassingCore(
            self.store, "actor.core", rng, d_node_in=self.d_node, d_edge_in=0)
        latent = self.actor_core.latent
        self.head = MLP2(self.store, "actor.head", latent, latent, 1, rng)
        self.log_sigma = self.store.add("actor.log_sigma",
                                        np.array(np.log(INITIAL_SIGMA)))
        self.value_core = MessagePassingCore(
            self.store, "value.core", rng, d_node_in=self.d_node, d_edge_in=0)
        self.value_readout = MLP2(self.store, "value.readout", latent, latent, 1, rng)
        self.norm = RunningNorm(N_BASE_FEATURES)
        self.apsp_count = 0
        self._topology = None
        self._edge_rows = None
        self._stack = None
        self._prev_weights = None

    @property
    def sigma(self) -> float:
        return float(np.exp(self.log_sigma.data))

    def begin_episode(self, topology) -> None:
        self._topology = topology
        orig = topology.directed_edges()
        self._edge_rows = {e: i for i, e in enumerate(orig)}
        self._stack = FrameStack(len(orig), N_BASE_FEATURES, self.n_frames)
        self._prev_weights = np.ones(len(orig))

    def observe(self, edges: list, lu: np.ndarray, training: bool) -> LinkWeightInput:
        if self._topology is None:
            raise RuntimeFailure("begin_episode() must run before observe()")
        rows_idx = np.array([self._edge_rows[e] for e in edges], dtype=np.int64)
        feats = np.stack([np.asarray(lu, dtype=np.float64),
                          self._prev_weights[rows_idx]], axis=1)
        if training:
            self.norm.update(feats)
        self._stack.push(rows_idx, self.norm.normalize(feats))
        nodes, arcs = line_digraph(list(edges))
        if nodes != sorted(edges):
            raise RuntimeFailure("edge list must arrive sorted")
        batch = GraphBatch.single(
            len(nodes), np.asarray(arcs, dtype=np.int64).reshape(-1, 2),
            self._stack.stacked(rows_idx),
            np.zeros((len(arcs), 0)))
        return LinkWeightInput(batch=batch, edges=list(nodes))

    def _raw_scores(self, batch: GraphBatch) -> Tensor:
        x_v, _ = self.actor_core(batch)
        return reshape(self.head(x_v), (-1,))

    def mean_weights(self, inp: LinkWeightInput) -> np.ndarray:
        o = self._raw_scores(inp.batch).data
        return np.log1p(np.exp(-np.abs(o))) + np.maximum(o, 0.0)

    def act(self, inp: LinkWeightInput, mode: str, rng=None) -> LinkWeightAction:
        o = self._raw_scores(inp.batch).data
        sigma = self.sigma
        if mode == "greedy":
            raw = o.copy()
        elif mode == "explore":
            raw = o + sigma * rng.standard_normal(len(o))
        else:
            raise RuntimeFailure(f"unknown action mode: {mode}")
        z = (raw - o) / sigma
        logp = float(np.sum(-0.5 * z * z - np.log(sigma) - 0.5 * LOG_2PI))
        weights = np.log1p(np.exp(-np.abs(raw))) + np.maximum(raw, 0.0)
        return LinkWeightAction(raw=raw, weights=weights, log_prob=logp)

    def to_routing_table(self, inp: LinkWeightInput, action: LinkWeightAction) -> np.ndarray:
        """Shortest-path next hops under the action's weights; one APSP."""
        weights = {e: float(w) for e, w in zip(inp.edges, action.weights)}
        self.apsp_count += 1
        return weights_to_action(self._topology.n_nodes, weights)

    def commit_weights(self, inp: LinkWeightInput, action: LinkWeightAction) -> None:
        """Record applied weights as the next step's history feature."""
        rows_idx = np.array([self._edge_rows[e] for e in inp.edges], dtype=np.int64)
        self._prev_weights[rows_idx] = action.weights

    def value(self, inp: LinkWeightInput) -> float:
        x_v, _ = self.value_core(inp.batch)
        out = self.value_readout(x_v)
        return float(out.data.mean())

    def evaluate_actions(self, inputs: list, actions: list):
        """Per-decision log-probs/values via one disjoint-union forward.

        Every directed edge's weight draw is one decision; the returned
        (D, 1) log-prob tensor is paired with a (D,) map from decision
        to transition index.
        """
        g_count = len(inputs)
        batch = GraphBatch.union([inp.batch for inp in inputs])
        raw = np.concatenate([a.raw for a in actions])
        o = self._raw_scores(batch)
        inv_sigma = exp(neg(self.log_sigma))
        z = mul(Tensor(raw) - o, inv_sigma)
        logp = reshape(neg(mul(z, z) * 0.5) - self.log_sigma - 0.5 * LOG_2PI,
                       (-1, 1))

        x_v, _ = self.value_core(batch)
        v_node = self.value_readout(x_v)
        value = segment_mean(v_node, batch.node_graph, g_count)

        entropy = 0.5 * (1.0 + LOG_2PI) + float(self.log_sigma.data)
        return logp, batch.node_graph, value, entropy

    def normalizer_state(self) -> dict:
        return {f"norm_{k}": v for k, v in self.norm.state_dict().items()}

    def load_normalizer_state(self, state: dict) -> None:
        self.norm.load_state_dict({
            "count": state["norm_count"],
            "mean": state["norm_mean"],
            "m2": state["norm_m2"],
        })
