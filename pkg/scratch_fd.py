import numpy as np

from routelab.nn import (
    GraphBatch, MessagePassingCore, ParamStore, Tensor, no_grad,
    segment_logsumexp, segment_min, tsum, mul, softplus, layer_norm, clip,
    minimum, gather_rows, concat,
)


def loss_fn(core, batch):
    x_v, x_e = core(batch)
    return tsum(mul(x_v, x_v)) + tsum(mul(x_e, x_e))


def main():
    rng = np.random.default_rng(3)
    store = ParamStore()
    core = MessagePassingCore(store, "mpn", rng, d_node_in=3, d_edge_in=2, d_global_in=4)
    edges = np.array([[0, 1], [0, 2], [1, 0], [2, 0], [2, 3], [3, 2]])
    batch = GraphBatch.single(
        4, edges,
        rng.standard_normal((4, 3)),
        rng.standard_normal((6, 2)),
        rng.standard_normal((1, 4)),
    )
    store.zero_grad()
    loss = loss_fn(core, batch)
    loss.backward()
    analytic = store.flat_grads()

    flat0 = store.flat_values()
    eps = 1e-4
    idx = rng.choice(flat0.size, size=200, replace=False)
    worst = 0.0
    for i in idx:
        for sgn, store_val in ((1, None),):
            pass
        fplus = flat0.copy(); fplus[i] += eps
        store.set_flat_values(fplus)
        lp = loss_fn(core, batch).data.item()
        fminus = flat0.copy(); fminus[i] -= eps
        store.set_flat_values(fminus)
        lm = loss_fn(core, batch).data.item()
        store.set_flat_values(flat0)
        fd = (lp - lm) / (2 * eps)
        denom = max(abs(fd), abs(analytic[i]), 1e-8)
        rel = abs(fd - analytic[i]) / denom
        worst = max(worst, rel)
    print(f"MPN FD check over {len(idx)} params: worst rel err {worst:.3e}")
    assert worst < 1e-4, worst

    # Batched union must reproduce per-graph outputs.
    b2 = GraphBatch.single(
        3, np.array([[0, 1], [1, 2], [2, 0]]),
        rng.standard_normal((3, 3)),
        rng.standard_normal((3, 2)),
        rng.standard_normal((1, 4)),
    )
    u = GraphBatch.union([batch, b2])
    with no_grad():
        xv_a, xe_a = core(batch)
        xv_b, xe_b = core(b2)
        xv_u, xe_u = core(u)
    assert np.allclose(np.concatenate([xv_a.data, xv_b.data]), xv_u.data)
    assert np.allclose(np.concatenate([xe_a.data, xe_b.data]), xe_u.data)
    assert u.node_offsets.tolist() == [0, 4, 7]
    assert u.edge_offsets.tolist() == [0, 6, 9]
    print("union consistency OK")

    # segment_logsumexp matches scipy-style direct computation.
    vals = Tensor(rng.standard_normal(7), requires_grad=True)
    seg = np.array([0, 0, 0, 1, 1, 2, 2])
    lse = segment_logsumexp(vals, seg, 3)
    direct = [np.log(np.sum(np.exp(vals.data[seg == k]))) for k in range(3)]
    assert np.allclose(lse.data, direct)
    s = tsum(mul(lse, Tensor(np.array([1.0, 2.0, -1.0]))))
    s.backward()
    g_an = vals.grad.copy()
    for i in range(7):
        v0 = vals.data[i]
        vals.data[i] = v0 + 1e-6
        lp = sum(w * np.log(np.sum(np.exp(vals.data[seg == k]))) for k, w in enumerate([1.0, 2.0, -1.0]))
        vals.data[i] = v0 - 1e-6
        lm = sum(w * np.log(np.sum(np.exp(vals.data[seg == k]))) for k, w in enumerate([1.0, 2.0, -1.0]))
        vals.data[i] = v0
        assert abs((lp - lm) / 2e-6 - g_an[i]) < 1e-5
    print("segment_logsumexp OK")

    # segment_min tie sharing: two equal minima split the gradient.
    x = Tensor(np.array([2.0, 1.0, 1.0, 5.0]), requires_grad=True)
    m = segment_min(x, np.array([0, 0, 0, 1]), 2)
    tsum(m).backward()
    assert np.allclose(x.grad, [0.0, 0.5, 0.5, 1.0])
    # softplus/clip/minimum sanity
    assert abs(softplus(Tensor(0.0)).data - np.log(2)) < 1e-12
    c = clip(Tensor(np.array([-2.0, 0.5, 3.0])), 0.0, 1.0)
    assert np.allclose(c.data, [0.0, 0.5, 1.0])
    mn = minimum(Tensor(np.array([1.0, 4.0])), Tensor(np.array([2.0, 3.0])))
    assert np.allclose(mn.data, [1.0, 3.0])
    ln = layer_norm(Tensor(rng.standard_normal((5, 12))))
    assert np.allclose(ln.data.mean(axis=1), 0, atol=1e-9)
    print("op sanity OK")

    # no_grad leaves no tape.
    with no_grad():
        out = loss_fn(core, batch)
    assert out.parents == () and not out.requires_grad
    print("no_grad OK")


main()
