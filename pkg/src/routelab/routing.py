"""Graph algorithms and classical routing.

Link-weight formulas for OSPF/EIGRP-style shortest-path routing, Dijkstra
and Floyd-Warshall solvers with a shared deterministic tie-breaking rule,
line-digraph construction, conversion from link weights to next-hop
tables, random baselines, and the action-fluctuation metric.

A next-hop table is an (n, n) integer array: entry [u, z] is the neighbor
u forwards to for destination z (the diagonal holds u itself, -1 marks an
unusable entry). All edge lists are sorted lexicographically, and ties in
path costs always resolve toward the smallest node id.
"""

from __future__ import annotations

import heapq
from collections import defaultdict

import numpy as np

from .errors import ConfigurationError

OSPF_REF_BPS = 1e8
EIGRP_REF_BPS = 1e7
EIGRP_REF_DELAY_MS = 10.0
EIGRP_FACTOR = 256.0
RANDOM_WEIGHT_LOW = 0.5
RANDOM_WEIGHT_HIGH = 10.0


def ospf_weight(datarate_bps: float) -> float:
    """Inverse-datarate link cost with a 100 Mbit/s reference."""
    return OSPF_REF_BPS / datarate_bps


def eigrp_weight(datarate_bps: float, delay_ms: float) -> float:
    """Composite bandwidth-plus-delay link cost."""
    return EIGRP_FACTOR * (EIGRP_REF_BPS / datarate_bps + delay_ms / EIGRP_REF_DELAY_MS)


def protocol_weights(topology, failed=frozenset(), protocol: str = "eigrp") -> dict:
    """Per-directed-edge weights for a classical protocol on surviving links."""
    weights = {}
    for link in topology.links:
        if (link.u, link.v) in failed or (link.v, link.u) in failed:
            continue
        if protocol == "ospf":
            w = ospf_weight(link.datarate_bps)
        elif protocol == "eigrp":
            w = eigrp_weight(link.datarate_bps, link.delay_ms)
        else:
            raise ConfigurationError(f"unknown protocol {protocol!r}")
        weights[(link.u, link.v)] = w
        weights[(link.v, link.u)] = w
    return weights


def weight_matrix(n: int, weights: dict) -> np.ndarray:
    """Dense (n, n) cost matrix: 0 diagonal, inf where no edge exists."""
    mat = np.full((n, n), np.inf)
    np.fill_diagonal(mat, 0.0)
    for (u, v), w in weights.items():
        if w <= 0 or not np.isfinite(w):
            raise ConfigurationError(f"link weight for edge {(u, v)} must be positive, got {w}")
        mat[u, v] = w
    return mat


def dijkstra(n: int, weights: dict, source: int) -> tuple[np.ndarray, np.ndarray]:
    """Single-source shortest paths; ties in predecessors go to the smallest id."""
    adj: dict[int, list[tuple[int, float]]] = defaultdict(list)
    for (u, v), w in weights.items():
        if w <= 0 or not np.isfinite(w):
            raise ConfigurationError(f"link weight for edge {(u, v)} must be positive, got {w}")
        adj[u].append((v, w))
    for lst in adj.values():
        lst.sort()
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=int)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and pred[v] >= 0 and u < pred[v]:
                pred[v] = u
    return dist, pred


def floyd_warshall(n: int, weights: dict) -> np.ndarray:
    """All-pairs shortest-path cost matrix (vectorized relaxation)."""
    dist = weight_matrix(n, weights)
    for k in range(n):
        np.minimum(dist, dist[:, k : k + 1] + dist[k : k + 1, :], out=dist)
    return dist


def next_hops_from_distances(n: int, weights: dict, dist: np.ndarray) -> np.ndarray:
    """Extract the next-hop table from an APSP cost matrix.

    next_hop(u, z) minimizes w(u, v) + dist(v, z) over neighbors v; cost
    ties resolve to the smallest neighbor id. Unreachable destinations get
    -1 (cannot occur on connected graphs).
    """
    out_neighbors: dict[int, list[int]] = defaultdict(list)
    out_weights: dict[int, list[float]] = defaultdict(list)
    for (u, v), w in sorted(weights.items()):
        out_neighbors[u].append(v)
        out_weights[u].append(w)
    table = np.full((n, n), -1, dtype=np.int64)
    for u in range(n):
        vs = out_neighbors.get(u)
        if not vs:
            table[u, u] = u
            continue
        vs_arr = np.array(vs)
        # (k, n): cost through each neighbor; argmin picks the first
        # (= smallest id, since neighbor lists are sorted) minimizer.
        costs = np.array(out_weights[u])[:, None] + dist[vs_arr, :]
        best = vs_arr[np.argmin(costs, axis=0)]
        best[~np.isfinite(np.min(costs, axis=0))] = -1
        table[u] = best
        table[u, u] = u
    return table


def weights_to_action(n: int, weights: dict) -> np.ndarray:
    """Next-hop table induced by shortest paths under the given weights."""
    dist = floyd_warshall(n, weights)
    return next_hops_from_distances(n, weights, dist)


def line_digraph(edges: list[tuple[int, int]]) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Derived digraph whose nodes are the input's directed edges.

    An arc connects edge i to edge j exactly when i's head is j's tail
    (directed path of length two); 2-cycles (u,v)->(v,u) are included.
    Arcs are index pairs into the returned (sorted) node list.
    """
    nodes = sorted(edges)
    by_tail: dict[int, list[int]] = defaultdict(list)
    for j, (w, _) in enumerate(nodes):
        by_tail[w].append(j)
    arcs = []
    for i, (_, v) in enumerate(nodes):
        for j in by_tail.get(v, ()):
            arcs.append((i, j))
    return nodes, arcs


def random_next_hop_action(n: int, edges: list[tuple[int, int]], rng: np.random.Generator) -> np.ndarray:
    """Uniform random neighbor per (node, destination); loops permitted."""
    neighbors: dict[int, list[int]] = defaultdict(list)
    for u, v in sorted(edges):
        neighbors[u].append(v)
    table = np.full((n, n), -1, dtype=np.int64)
    for u in range(n):
        vs = neighbors.get(u, [])
        for z in range(n):
            if z == u:
                table[u, z] = u
            elif vs:
                table[u, z] = vs[int(rng.integers(len(vs)))]
    return table


def random_link_weights(edges: list[tuple[int, int]], rng: np.random.Generator) -> dict:
    """Independent uniform weights in (0.5, 10] per directed edge."""
    return {
        e: float(RANDOM_WEIGHT_HIGH - rng.uniform(0.0, RANDOM_WEIGHT_HIGH - RANDOM_WEIGHT_LOW))
        for e in sorted(edges)
    }


def action_fluctuation(prev: np.ndarray, cur: np.ndarray) -> float:
    """Fraction of (node, destination) pairs whose next hop changed."""
    if prev.shape != cur.shape:
        raise ConfigurationError(
            f"next-hop tables must share a node set, got shapes {prev.shape} and {cur.shape}"
        )
    n = prev.shape[0]
    off_diag = ~np.eye(n, dtype=bool)
    return float(np.mean(prev[off_diag] != cur[off_diag]))


def is_loop_free(table: np.ndarray, n: int) -> bool:
    """True when every per-destination next-hop graph is a tree reaching z."""
    for z in range(n):
        for start in range(n):
            seen = set()
            u = start
            while u != z:
                if u in seen:
                    return False
                seen.add(u)
                u = int(table[u, z])
                if u < 0:
                    return False
    return True
