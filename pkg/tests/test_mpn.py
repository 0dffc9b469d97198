"""Structural checks for graph batching and message passing."""

import numpy as np
import pytest

from routelab.errors import RuntimeFailure
from routelab.nn.autodiff import tsum
from routelab.nn.mpn import LATENT_DIM, N_ROUNDS, GraphBatch, MessagePassingCore
from routelab.nn.params import ParamStore


def tiny_batch(rng, n_nodes=5, seed_edges=None):
    if seed_edges is None:
        seed_edges = [(0, 1), (0, 3), (1, 2), (2, 0), (3, 4), (4, 2)]
    edges = np.array(sorted(seed_edges), dtype=np.int64)
    return GraphBatch.single(
        n_nodes,
        edges,
        rng.normal(size=(n_nodes, 3)),
        rng.normal(size=(len(edges), 2)),
        rng.normal(size=(1, 4)),
    )


def test_single_requires_sorted_tails():
    with pytest.raises(RuntimeFailure):
        GraphBatch.single(3, np.array([[2, 0], [0, 1]]),
                          np.zeros((3, 1)), np.zeros((2, 1)))


def test_union_offsets_and_graph_ids():
    rng = np.random.default_rng(0)
    a = tiny_batch(rng)
    b = tiny_batch(rng, n_nodes=4, seed_edges=[(0, 1), (1, 2), (2, 3), (3, 0)])
    u = GraphBatch.union([a, b])
    assert u.n_nodes == 9
    assert u.n_graphs == 2
    np.testing.assert_array_equal(u.node_graph, [0] * 5 + [1] * 4)
    np.testing.assert_array_equal(u.edge_graph, [0] * 6 + [1] * 4)
    np.testing.assert_array_equal(u.node_offsets, [0, 5, 9])
    np.testing.assert_array_equal(u.edge_offsets, [0, 6, 10])
    # second graph's edges are shifted past the first graph's nodes
    assert u.edges[6:].min() == 5
    np.testing.assert_array_equal(u.edges[6:] - 5, b.edges)


def test_union_of_unions_nests():
    rng = np.random.default_rng(1)
    parts = [tiny_batch(rng) for _ in range(3)]
    u = GraphBatch.union([GraphBatch.union(parts[:2]), parts[2]])
    assert u.n_graphs == 3
    assert u.n_nodes == 15
    np.testing.assert_array_equal(np.diff(u.node_offsets), [5, 5, 5])


def test_core_output_shapes():
    rng = np.random.default_rng(2)
    batch = tiny_batch(rng)
    core = MessagePassingCore(ParamStore(), "core", rng, d_node_in=3,
                              d_edge_in=2, d_global_in=4)
    x_v, x_e = core(batch)
    assert x_v.data.shape == (5, LATENT_DIM)
    assert x_e.data.shape == (6, LATENT_DIM)
    assert np.isfinite(x_v.data).all()
    assert np.isfinite(x_e.data).all()


def test_batching_matches_separate_forward():
    # the union forward must reproduce each member's solo forward exactly
    rng = np.random.default_rng(3)
    core = MessagePassingCore(ParamStore(), "core", rng, d_node_in=3,
                              d_edge_in=2, d_global_in=4)
    a = tiny_batch(np.random.default_rng(10))
    b = tiny_batch(np.random.default_rng(11), n_nodes=4,
                   seed_edges=[(0, 2), (1, 0), (2, 3), (3, 1)])
    xa, ea = core(a)
    xb, eb = core(b)
    xu, eu = core(GraphBatch.union([a, b]))
    np.testing.assert_allclose(xu.data[:5], xa.data, atol=1e-12)
    np.testing.assert_allclose(xu.data[5:], xb.data, atol=1e-12)
    np.testing.assert_allclose(eu.data[:6], ea.data, atol=1e-12)
    np.testing.assert_allclose(eu.data[6:], eb.data, atol=1e-12)


def test_node_permutation_equivariance():
    # relabeling nodes permutes node latents and leaves edge latents tied
    # to their (relabeled) edges
    rng = np.random.default_rng(4)
    core = MessagePassingCore(ParamStore(), "core", rng, d_node_in=3,
                              d_edge_in=2, d_global_in=4)
    base = tiny_batch(np.random.default_rng(20))
    perm = np.array([3, 0, 4, 1, 2])  # new index of old node i

    edges_p = np.stack([perm[base.edges[:, 0]], perm[base.edges[:, 1]]], axis=1)
    order = np.lexsort((edges_p[:, 1], edges_p[:, 0]))
    inv = np.empty_like(perm)
    inv[perm] = np.arange(5)
    permuted = GraphBatch.single(
        5,
        edges_p[order],
        base.node_feats[inv],
        base.edge_feats[order],
        base.global_feats,
    )
    x0, e0 = core(base)
    x1, e1 = core(permuted)
    np.testing.assert_allclose(x1.data, x0.data[inv], atol=1e-9)
    np.testing.assert_allclose(e1.data, e0.data[order], atol=1e-9)


def test_gradients_reach_all_parameters():
    rng = np.random.default_rng(5)
    store = ParamStore()
    core = MessagePassingCore(store, "core", rng, d_node_in=3,
                              d_edge_in=2, d_global_in=4)
    batch = tiny_batch(np.random.default_rng(30))
    x_v, x_e = core(batch)
    (tsum(x_v) + tsum(x_e)).backward()
    for name in store.names():
        t = store[name]
        assert t.grad is not None, name
        if t.data.size:
            assert np.abs(t.grad).max() > 0, name


def test_tail_only_edge_update():
    rng = np.random.default_rng(6)
    store = ParamStore()
    core = MessagePassingCore(store, "core", rng, d_node_in=3, d_edge_in=2,
                              d_global_in=4, include_head=False)
    # tail-only edge update concatenates two latent blocks instead of three
    assert store["core.edge_upd0.fc1.w"].data.shape[0] == 2 * LATENT_DIM
    batch = tiny_batch(np.random.default_rng(40))
    x_v, x_e = core(batch)
    assert x_v.data.shape == (5, LATENT_DIM)
    assert x_e.data.shape == (6, LATENT_DIM)


def test_round_count_parameterization():
    store = ParamStore()
    MessagePassingCore(store, "core", np.random.default_rng(7),
                       d_node_in=1, d_edge_in=1)
    upd = [n for n in store.names() if ".edge_upd" in n or ".node_upd" in n]
    layers = {n.split(".")[1] for n in upd}
    assert layers == {f"edge_upd{l}" for l in range(N_ROUNDS)} | {
        f"node_upd{l}" for l in range(N_ROUNDS)}
