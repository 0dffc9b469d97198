"""Learned per-destination next-hop routing policy.

A message-passing core embeds the monitored network graph; a readout
scores every (destination, directed edge) combination, and per
(node, destination) the scores become a Boltzmann distribution over the
node's out-edges. Sampling the distribution yields a full next-hop
table in one shot. Shortest-path distances under EIGRP weights feed the
readout, computed once per topology and reused until links fail.
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
    concat,
    exp,
    gather_rows,
    mul,
    neg,
    reshape,
    segment_logsumexp,
    segment_mean,
)
from ..packetsim.state import N_EDGE_FEATURES, N_GLOBAL_FEATURES, NetworkState
from ..routing import floyd_warshall, protocol_weights
from .observe import N_FRAMES, FrameStack, RunningNorm, VectorStack

INITIAL_TEMPERATURE = 4.0


@dataclass
class NextHopInput:
    """One step's policy input: graph batch plus rating-row indexing.

    Rating rows are ordered destination-major: row z*E + j scores edge j
    for destination z. pair_seg groups rows by (destination, tail node)
    so per-pair softmaxes are contiguous segments.
    """

    batch: GraphBatch
    edges: list
    tails: np.ndarray
    heads: np.ndarray
    row_edge: np.ndarray
    row_node: np.ndarray
    dist_feats: np.ndarray
    pair_seg: np.ndarray
    n_pairs: int
    valid_pair: np.ndarray
    pair_start: np.ndarray
    pair_count: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.batch.n_nodes


@dataclass
class NextHopAction:
    """A sampled routing table plus what PPO needs to rescore it."""

    table: np.ndarray
    chosen_row: np.ndarray
    log_prob: float


class NextHopPolicy:
    """Actor-critic pair over the monitored network graph."""

    def __init__(self, rng: np.random.Generator, n_frames: int = N_FRAMES):
        self.n_frames = n_frames
        self.d_edge = N_EDGE_FEATURES * n_frames
        self.d_global = N_GLOBAL_FEATURES * n_frames
        self.store = ParamStore()
        self.actor_core = MessagePassingCore(
            self.store, "actor.core", rng, d_node_in=0, d_edge_in=self.d_edge,
            d_global_in=self.d_global)
        latent = self.actor_core.latent
        self.readout = MLP2(self.store, "actor.readout", 2 * latent + 2, latent, 1, rng)
        self.log_tau = self.store.add("actor.log_tau",
                                      np.array(np.log(INITIAL_TEMPERATURE)))
        self.value_core = MessagePassingCore(
            self.store, "value.core", rng, d_node_in=0, d_edge_in=self.d_edge,
            d_global_in=self.d_global)
        self.value_readout = MLP2(self.store, "value.readout", latent, latent, 1, rng)
        self.norm_edge = RunningNorm(N_EDGE_FEATURES)
        self.norm_global = RunningNorm(N_GLOBAL_FEATURES)
        self.apsp_count = 0
        self._topology = None
        self._edge_rows = None
        self._edge_stack = None
        self._global_stack = None
        self._dist = None

    @property
    def temperature(self) -> float:
        return float(np.exp(self.log_tau.data))

    def begin_episode(self, topology) -> None:
        self._topology = topology
        orig = topology.directed_edges()
        self._edge_rows = {e: i for i, e in enumerate(orig)}
        self._edge_stack = FrameStack(len(orig), N_EDGE_FEATURES, self.n_frames)
        self._global_stack = VectorStack(N_GLOBAL_FEATURES, self.n_frames)
        self._dist = None

    def _compute_distances(self, surviving: list) -> None:
        n = self._topology.n_nodes
        alive = set(surviving)
        failed = {(u, v) for (u, v) in self._topology.undirected_pairs()
                  if (u, v) not in alive}
        weights = protocol_weights(self._topology, frozenset(failed), "eigrp")
        self._dist = floyd_warshall(n, weights)
        self.apsp_count += 1

    def observe(self, state: NetworkState, training: bool) -> NextHopInput:
        if self._topology is None:
            raise RuntimeFailure("begin_episode() must run before observe()")
        if training:
            self.norm_edge.update(state.edge_features)
            self.norm_global.update(state.global_features)
        rows_idx = np.array([self._edge_rows[e] for e in state.edges], dtype=np.int64)
        self._edge_stack.push(rows_idx, self.norm_edge.normalize(state.edge_features))
        self._global_stack.push(self.norm_global.normalize(state.global_features))
        if self._dist is None or state.topology_changed:
            self._compute_distances(state.edges)
        return self._build_input(state.edges, rows_idx)

    def _build_input(self, edges: list, rows_idx: np.ndarray) -> NextHopInput:
        n = self._topology.n_nodes
        n_edges = len(edges)
        tails = np.array([u for u, _ in edges], dtype=np.int64)
        heads = np.array([v for _, v in edges], dtype=np.int64)
        batch = GraphBatch.single(
            n, np.stack([tails, heads], axis=1),
            np.zeros((n, 0)),
            self._edge_stack.stacked(rows_idx),
            self._global_stack.stacked().reshape(1, -1))
        finite = self._dist[np.isfinite(self._dist)]
        scale = float(finite.max())
        if scale <= 0.0:
            scale = 1.0
        dnorm = self._dist / scale
        row_edge = np.tile(np.arange(n_edges, dtype=np.int64), n)
        row_node = np.repeat(np.arange(n, dtype=np.int64), n_edges)
        dist_feats = np.stack(
            [dnorm[tails[row_edge], row_node], dnorm[heads[row_edge], row_node]],
            axis=1)
        pair_seg = row_node * n + tails[row_edge]
        n_pairs = n * n
        pair_count = np.bincount(pair_seg, minlength=n_pairs)
        pair_start = np.concatenate([[0], np.cumsum(pair_count)[:-1]])
        z_of_pair = np.arange(n_pairs) // n
        v_of_pair = np.arange(n_pairs) % n
        valid_pair = z_of_pair != v_of_pair
        if np.any(pair_count[valid_pair] == 0):
            raise RuntimeFailure("node with no surviving out-edge")
        return NextHopInput(
            batch=batch, edges=list(edges), tails=tails, heads=heads,
            row_edge=row_edge, row_node=row_node, dist_feats=dist_feats,
            pair_seg=pair_seg, n_pairs=n_pairs, valid_pair=valid_pair,
            pair_start=pair_start.astype(np.int64),
            pair_count=pair_count.astype(np.int64))

    def _ratings(self, batch: GraphBatch, row_edge, row_node, dist_feats) -> Tensor:
        x_v, x_e = self.actor_core(batch)
        rows = concat([
            gather_rows(x_e, row_edge),
            gather_rows(x_v, row_node),
            Tensor(dist_feats),
        ], axis=1)
        return reshape(self.readout(rows), (-1,))

    def ratings_matrix(self, inp: NextHopInput) -> np.ndarray:
        """Scores as a (destinations, edges) matrix; diagnostic view."""
        r = self._ratings(inp.batch, inp.row_edge, inp.row_node, inp.dist_feats)
        return r.data.reshape(inp.n_nodes, len(inp.edges))

    def _pair_log_probs_np(self, inp: NextHopInput, ratings: np.ndarray) -> np.ndarray:
        logits = ratings / self.temperature
        out = np.full(len(logits), -np.inf)
        for p in np.flatnonzero(inp.pair_count):
            s, c = inp.pair_start[p], inp.pair_count[p]
            seg = logits[s:s + c]
            m = seg.max()
            out[s:s + c] = seg - (m + np.log(np.sum(np.exp(seg - m))))
        return out

    def act(self, inp: NextHopInput, mode: str, rng=None) -> NextHopAction:
        """Build a routing table by per-(node, destination) edge choice.

        explore samples each pair's Boltzmann distribution; greedy takes
        the argmax rating (ties resolve to the smallest edge id).
        """
        r = self._ratings(inp.batch, inp.row_edge, inp.row_node, inp.dist_feats)
        ratings = r.data
        log_probs = self._pair_log_probs_np(inp, ratings)
        n = inp.n_nodes
        table = np.empty((n, n), dtype=np.int64)
        np.fill_diagonal(table, np.arange(n))
        chosen_row = np.full(inp.n_pairs, -1, dtype=np.int64)
        total_logp = 0.0
        for p in np.flatnonzero(inp.valid_pair):
            s, c = inp.pair_start[p], inp.pair_count[p]
            if mode == "explore":
                probs = np.exp(log_probs[s:s + c])
                probs = probs / probs.sum()
                k = int(rng.choice(c, p=probs))
            elif mode == "greedy":
                k = int(np.argmax(ratings[s:s + c]))
            else:
                raise RuntimeFailure(f"unknown action mode: {mode}")
            row = s + k
            chosen_row[p] = row
            total_logp += log_probs[row]
            z = p // n
            v = p % n
            table[v, z] = inp.heads[inp.row_edge[row]]
        return NextHopAction(table=table, chosen_row=chosen_row,
                             log_prob=float(total_logp))

    def action_from_table(self, inp: NextHopInput, table: np.ndarray) -> NextHopAction:
        """Wrap an externally chosen table (e.g. a protocol baseline) so
        PPO can score it under the current policy."""
        n = inp.n_nodes
        edge_of = {(int(inp.tails[j]), int(inp.heads[j])): j
                   for j in range(len(inp.edges))}
        chosen_row = np.full(inp.n_pairs, -1, dtype=np.int64)
        for p in np.flatnonzero(inp.valid_pair):
            z = p // n
            v = p % n
            hop = int(table[v, z])
            j = edge_of.get((v, hop))
            if j is None:
                raise RuntimeFailure("table uses a non-existent edge")
            chosen_row[p] = z * len(inp.edges) + j
        r = self._ratings(inp.batch, inp.row_edge, inp.row_node, inp.dist_feats)
        log_probs = self._pair_log_probs_np(inp, r.data)
        logp = float(log_probs[chosen_row[inp.valid_pair]].sum())
        return NextHopAction(table=np.array(table, dtype=np.int64),
                             chosen_row=chosen_row, log_prob=logp)

    def value(self, inp: NextHopInput) -> float:
        x_v, _ = self.value_core(inp.batch)
        out = self.value_readout(x_v)
        return float(out.data.mean())

    def evaluate_actions(self, inputs: list, actions: list):
        """Per-decision log-probs, values, and entropy for a minibatch.

        Member graphs are disjoint-unioned so the whole minibatch runs
        through the cores in one pass. Every valid (router, destination)
        pair is one decision. Returns the (D, 1) chosen log-prob tensor,
        a (D,) map from decision to transition index, the (G, 1) value
        tensor, and a scalar mean entropy diagnostic.
        """
        g_count = len(inputs)
        batch = GraphBatch.union([inp.batch for inp in inputs])
        row_edge, row_node, dist_feats, pair_seg = [], [], [], []
        chosen, chosen_graph, row_valid = [], [], []
        row_base = 0
        pair_base = 0
        for g, (inp, act) in enumerate(zip(inputs, actions)):
            row_edge.append(inp.row_edge + batch.edge_offsets[g])
            row_node.append(inp.row_node + batch.node_offsets[g])
            dist_feats.append(inp.dist_feats)
            pair_seg.append(inp.pair_seg + pair_base)
            row_valid.append(inp.valid_pair[inp.pair_seg])
            rows = act.chosen_row[inp.valid_pair] + row_base
            chosen.append(rows)
            chosen_graph.append(np.full(len(rows), g, dtype=np.int64))
            row_base += len(inp.row_edge)
            pair_base += inp.n_pairs
        row_edge = np.concatenate(row_edge)
        row_node = np.concatenate(row_node)
        dist_feats = np.concatenate(dist_feats, axis=0)
        pair_seg = np.concatenate(pair_seg)
        chosen = np.concatenate(chosen)
        chosen_graph = np.concatenate(chosen_graph)
        row_valid = np.concatenate(row_valid)

        ratings = self._ratings(batch, row_edge, row_node, dist_feats)
        inv_tau = exp(neg(self.log_tau))
        logits = mul(ratings, inv_tau)
        lse = segment_logsumexp(logits, pair_seg, pair_base)
        chosen_pair = pair_seg[chosen]
        logp = reshape(gather_rows(logits, chosen) -
                       gather_rows(lse, chosen_pair), (-1, 1))

        x_v, _ = self.value_core(batch)
        v_node = self.value_readout(x_v)
        value = segment_mean(v_node, batch.node_graph, g_count)

        lp = logits.data - lse.data[pair_seg]
        p = np.exp(lp)
        ent_rows = np.where(row_valid, -p * lp, 0.0)
        entropy = float(np.sum(ent_rows)) / max(float(len(chosen)), 1.0)
        return logp, chosen_graph, value, entropy

    def normalizer_state(self) -> dict:
        state = {}
        for key, norm in (("edge", self.norm_edge), ("global", self.norm_global)):
            for k, v in norm.state_dict().items():
                state[f"norm_{key}_{k}"] = v
        return state

    def load_normalizer_state(self, state: dict) -> None:
        for key, norm in (("edge", self.norm_edge), ("global", self.norm_global)):
            norm.load_state_dict({
                "count": state[f"norm_{key}_count"],
                "mean": state[f"norm_{key}_mean"],
                "m2": state[f"norm_{key}_m2"],
            })
