"""Message passing over directed graphs with disjoint-union batching.

Each round updates edge latents from their endpoint latents, aggregates
the fresh edge latents at each tail node (mean and minimum, concatenated),
and updates node latents from the aggregate. Both entity types get a
layer-normalized residual update per round, so latents stay well scaled
through repeated rounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import RuntimeFailure
from .autodiff import Tensor, add, concat, gather_rows, layer_norm, segment_mean, segment_min
from .layers import MLP2
from .params import ParamStore

LATENT_DIM = 12
N_ROUNDS = 2


@dataclass
class GraphBatch:
    """One or more disjoint directed graphs stacked into flat arrays.

    Edges must be sorted so tail indices are nondecreasing; per-node
    aggregation relies on contiguous out-edge blocks.
    """

    n_nodes: int
    edges: np.ndarray
    node_feats: np.ndarray
    edge_feats: np.ndarray
    global_feats: np.ndarray
    node_graph: np.ndarray
    edge_graph: np.ndarray
    node_offsets: np.ndarray
    edge_offsets: np.ndarray

    @property
    def n_graphs(self) -> int:
        return self.global_feats.shape[0]

    @classmethod
    def single(cls, n_nodes: int, edges: np.ndarray, node_feats: np.ndarray,
               edge_feats: np.ndarray, global_feats=None) -> "GraphBatch":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.shape[0] > 1 and np.any(np.diff(edges[:, 0]) < 0):
            raise RuntimeFailure("edges must be sorted by tail node")
        node_feats = np.asarray(node_feats, dtype=np.float64)
        edge_feats = np.asarray(edge_feats, dtype=np.float64).reshape(edges.shape[0], -1)
        if global_feats is None:
            global_feats = np.zeros((1, 0))
        global_feats = np.asarray(global_feats, dtype=np.float64).reshape(1, -1)
        return cls(
            n_nodes=n_nodes,
            edges=edges,
            node_feats=node_feats,
            edge_feats=edge_feats,
            global_feats=global_feats,
            node_graph=np.zeros(n_nodes, dtype=np.int64),
            edge_graph=np.zeros(edges.shape[0], dtype=np.int64),
            node_offsets=np.array([0, n_nodes], dtype=np.int64),
            edge_offsets=np.array([0, edges.shape[0]], dtype=np.int64),
        )

    @classmethod
    def union(cls, batches: list) -> "GraphBatch":
        """Disjoint union; node indices are offset per member graph."""
        if not batches:
            raise RuntimeFailure("cannot union an empty batch list")
        edges, node_feats, edge_feats, global_feats = [], [], [], []
        node_graph, edge_graph = [], []
        node_counts, edge_counts = [], []
        node_base = 0
        graph_base = 0
        for b in batches:
            edges.append(b.edges + node_base)
            node_feats.append(b.node_feats)
            edge_feats.append(b.edge_feats)
            global_feats.append(b.global_feats)
            node_graph.append(b.node_graph + graph_base)
            edge_graph.append(b.edge_graph + graph_base)
            node_counts.extend(np.diff(b.node_offsets).tolist())
            edge_counts.extend(np.diff(b.edge_offsets).tolist())
            node_base += b.n_nodes
            graph_base += b.n_graphs
        return cls(
            n_nodes=node_base,
            edges=np.concatenate(edges, axis=0),
            node_feats=np.concatenate(node_feats, axis=0),
            edge_feats=np.concatenate(edge_feats, axis=0),
            global_feats=np.concatenate(global_feats, axis=0),
            node_graph=np.concatenate(node_graph),
            edge_graph=np.concatenate(edge_graph),
            node_offsets=np.concatenate([[0], np.cumsum(node_counts)]).astype(np.int64),
            edge_offsets=np.concatenate([[0], np.cumsum(edge_counts)]).astype(np.int64),
        )


class MessagePassingCore:
    """Encoder plus a fixed number of edge/node update rounds.

    Global features, when present, are appended to every node and edge
    input row at encoding time. The edge update sees tail, head, and
    edge latents; pass include_head=False to restrict it to tail only.
    """

    def __init__(self, store: ParamStore, name: str, rng: np.random.Generator,
                 d_node_in: int, d_edge_in: int, d_global_in: int = 0,
                 latent: int = LATENT_DIM, rounds: int = N_ROUNDS,
                 include_head: bool = True):
        self.latent = latent
        self.rounds = rounds
        self.include_head = include_head
        self.node_enc = MLP2(store, f"{name}.node_enc", d_node_in + d_global_in,
                             latent, latent, rng)
        self.edge_enc = MLP2(store, f"{name}.edge_enc", d_edge_in + d_global_in,
                             latent, latent, rng)
        e_in = latent * (3 if include_head else 2)
        self.edge_mlps = [
            MLP2(store, f"{name}.edge_upd{l}", e_in, latent, latent, rng)
            for l in range(rounds)
        ]
        self.node_mlps = [
            MLP2(store, f"{name}.node_upd{l}", latent * 3, latent, latent, rng)
            for l in range(rounds)
        ]

    def __call__(self, batch: GraphBatch):
        tails = batch.edges[:, 0]
        heads = batch.edges[:, 1]
        node_in = np.concatenate(
            [batch.node_feats, batch.global_feats[batch.node_graph]], axis=1)
        edge_in = np.concatenate(
            [batch.edge_feats, batch.global_feats[batch.edge_graph]], axis=1)
        x_v = self.node_enc(Tensor(node_in))
        x_e = self.edge_enc(Tensor(edge_in))
        n = batch.n_nodes
        for l in range(self.rounds):
            parts = [gather_rows(x_v, tails)]
            if self.include_head:
                parts.append(gather_rows(x_v, heads))
            parts.append(x_e)
            e_out = self.edge_mlps[l](concat(parts, axis=1))
            x_e = add(x_e, layer_norm(e_out))
            agg = concat([segment_mean(x_e, tails, n),
                          segment_min(x_e, tails, n)], axis=1)
            v_out = self.node_mlps[l](concat([x_v, agg], axis=1))
            x_v = add(x_v, layer_norm(v_out))
        return x_v, x_e
