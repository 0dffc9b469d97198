"""Shortest paths, protocol weights, and table helpers."""

import numpy as np
import pytest

from routelab.errors import ConfigurationError
from routelab.routing import (
    action_fluctuation,
    dijkstra,
    eigrp_weight,
    floyd_warshall,
    is_loop_free,
    line_digraph,
    next_hops_from_distances,
    ospf_weight,
    protocol_weights,
    random_link_weights,
    random_next_hop_action,
    weight_matrix,
    weights_to_action,
)
from routelab.scenarios import generate_scenario


def ring_weights(n, w=1.0):
    out = {}
    for i in range(n):
        j = (i + 1) % n
        out[(i, j)] = w
        out[(j, i)] = w
    return out


def test_protocol_weight_formulas():
    assert ospf_weight(1e8) == 1.0
    assert ospf_weight(5e7) == 2.0
    assert eigrp_weight(1e8, 5.0) == pytest.approx(256.0 * (0.1 + 0.5))
    assert eigrp_weight(1e7, 10.0) == pytest.approx(512.0)


def test_protocol_weights_skip_failed_links():
    scn = generate_scenario("nx-XS", 0, m_traffic=0.25, p_tcp=0.0)
    top = scn.topology
    u, v = top.links[0].u, top.links[0].v
    w = protocol_weights(top, failed=frozenset([(u, v)]))
    assert (u, v) not in w and (v, u) not in w
    full = protocol_weights(top)
    assert len(full) == len(w) + 2
    with pytest.raises(ConfigurationError):
        protocol_weights(top, protocol="rip")


def test_weight_matrix_rejects_nonpositive():
    with pytest.raises(ConfigurationError):
        weight_matrix(2, {(0, 1): 0.0})
    with pytest.raises(ConfigurationError):
        weight_matrix(2, {(0, 1): np.inf})


def test_dijkstra_ring_distances():
    w = ring_weights(5)
    dist, _ = dijkstra(5, w, 0)
    np.testing.assert_allclose(dist, [0, 1, 2, 2, 1])


def test_dijkstra_equals_floyd_warshall_random():
    # dual-route oracle on random connected weighted graphs
    rng = np.random.default_rng(0)
    for trial in range(40):
        n = int(rng.integers(4, 26))
        scn = generate_scenario("nx-XS", int(rng.integers(10_000)),
                                m_traffic=0.25, p_tcp=0.0)
        n = scn.topology.n_nodes
        weights = {}
        for link in scn.topology.links:
            wv = float(rng.uniform(0.5, 10.0))
            weights[(link.u, link.v)] = wv
            weights[(link.v, link.u)] = float(rng.uniform(0.5, 10.0))
        fw = floyd_warshall(n, weights)
        for s in range(n):
            d, _ = dijkstra(n, weights, s)
            np.testing.assert_allclose(d, fw[s], atol=1e-9)


def test_next_hop_extraction_line_graph():
    # 0-1-2 path: all traffic to 2 leaves 0 via 1
    w = {(0, 1): 1.0, (1, 0): 1.0, (1, 2): 1.0, (2, 1): 1.0}
    table = weights_to_action(3, w)
    assert table[0, 2] == 1
    assert table[1, 2] == 2
    assert table[2, 0] == 1
    assert table[0, 0] == 0


def test_next_hop_tie_breaks_to_smallest_neighbor():
    # square with equal weights: 0->3 | via 1 or 2 cost 2 either way
    w = {}
    for u, v in [(0, 1), (0, 2), (1, 3), (2, 3)]:
        w[(u, v)] = 1.0
        w[(v, u)] = 1.0
    table = weights_to_action(4, w)
    assert table[0, 3] == 1


def test_weights_to_action_loop_free_on_random_instances():
    rng = np.random.default_rng(1)
    for trial in range(25):
        scn = generate_scenario("nx-XS", trial, m_traffic=0.25, p_tcp=0.0)
        n = scn.topology.n_nodes
        weights = random_link_weights(
            [(l.u, l.v) for l in scn.topology.links] +
            [(l.v, l.u) for l in scn.topology.links], rng)
        table = weights_to_action(n, weights)
        assert is_loop_free(table, n)


def test_line_digraph_cycle_counts():
    # directed 3-cycle: 3 derived nodes, 3 derived arcs
    edges = [(0, 1), (1, 2), (2, 0)]
    nodes, arcs = line_digraph(edges)
    assert len(nodes) == 3
    assert len(arcs) == 3


def test_line_digraph_bidirected_path_counts():
    # bidirected path u-v-w: 4 directed edges; arcs follow head-to-tail
    # adjacency including the two 2-cycles
    edges = [(0, 1), (1, 0), (1, 2), (2, 1)]
    nodes, arcs = line_digraph(edges)
    assert nodes == sorted(edges)
    expect = set()
    for i, (_, h) in enumerate(nodes):
        for j, (t, _) in enumerate(nodes):
            if h == t:
                expect.add((i, j))
    assert set(arcs) == expect
    assert len(arcs) == 6


def test_line_digraph_arc_count_closed_form():
    # sum over nodes of in-degree * out-degree counts length-2 paths
    scn = generate_scenario("nx-XS", 5, m_traffic=0.25, p_tcp=0.0)
    top = scn.topology
    edges = [(l.u, l.v) for l in top.links] + [(l.v, l.u) for l in top.links]
    nodes, arcs = line_digraph(edges)
    deg = np.zeros((top.n_nodes, 2))
    for u, v in edges:
        deg[u, 0] += 1  # out
        deg[v, 1] += 1  # in
    assert len(nodes) == len(edges)
    assert len(arcs) == int((deg[:, 0] * deg[:, 1]).sum())


def test_random_next_hop_uses_real_neighbors():
    scn = generate_scenario("nx-XS", 9, m_traffic=0.25, p_tcp=0.0)
    top = scn.topology
    edges = [(l.u, l.v) for l in top.links] + [(l.v, l.u) for l in top.links]
    adj = {u: set() for u in range(top.n_nodes)}
    for u, v in edges:
        adj[u].add(v)
    table = random_next_hop_action(top.n_nodes, edges, np.random.default_rng(2))
    for u in range(top.n_nodes):
        for z in range(top.n_nodes):
            if u == z:
                assert table[u, z] == u
            else:
                assert table[u, z] in adj[u]


def test_random_link_weights_range():
    w = random_link_weights([(0, 1), (1, 0)], np.random.default_rng(3))
    assert set(w) == {(0, 1), (1, 0)}
    assert all(0.5 <= v <= 10.0 for v in w.values())


def test_action_fluctuation_counts_off_diagonal():
    a = np.array([[0, 1], [0, 1]])
    b = np.array([[0, 1], [1, 1]])  # one of two off-diagonal entries changed
    assert action_fluctuation(a, a) == 0.0
    assert action_fluctuation(a, b) == 0.5
    with pytest.raises(ConfigurationError):
        action_fluctuation(a, np.zeros((3, 3), dtype=int))


def test_is_loop_free_detects_cycle():
    # 0 and 1 point at each other for destination 2
    table = np.array([
        [0, 1, 1],
        [0, 1, 0],
        [2, 2, 2],
    ])
    assert not is_loop_free(table, 3)
