"""Gradient and value checks for the reverse-mode tape."""

import numpy as np
import pytest

from routelab.nn.autodiff import (
    Tensor,
    add,
    clip,
    concat,
    div,
    exp,
    gather_rows,
    grad_enabled,
    layer_norm,
    leaky_relu,
    log,
    matmul,
    minimum,
    mul,
    neg,
    no_grad,
    reshape,
    segment_logsumexp,
    segment_max_data,
    segment_mean,
    segment_min,
    segment_sum,
    softplus,
    sqrt,
    tmean,
    tsum,
)


def numeric_grad(f, x, h=1e-6):
    """Central-difference gradient of scalar f at array x."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = f(x)
        flat[i] = orig - h
        lo = f(x)
        flat[i] = orig
        gf[i] = (hi - lo) / (2 * h)
    return g


def check_grad(build, x0, rtol=1e-5, atol=1e-7):
    """Compare tape gradient of scalar build(Tensor) against central differences."""
    t = Tensor(x0.copy(), requires_grad=True)
    out = build(t)
    assert out.data.shape == ()
    out.backward()
    num = numeric_grad(lambda x: float(build(Tensor(x)).data), x0.copy())
    np.testing.assert_allclose(t.grad, num, rtol=rtol, atol=atol)


def test_add_broadcast_grad():
    rng = np.random.default_rng(0)
    b = Tensor(rng.normal(size=(1, 4)), requires_grad=True)

    def build(t):
        return tsum(mul(add(t, b), add(t, b)))

    x0 = rng.normal(size=(3, 4))
    check_grad(build, x0)
    # bias grad sums over the broadcast rows
    b.grad = None
    t = Tensor(x0, requires_grad=True)
    out = tsum(add(t, b))
    out.backward()
    np.testing.assert_allclose(b.grad, np.full((1, 4), 3.0))


def test_mul_div_grad():
    rng = np.random.default_rng(1)
    c = rng.normal(size=(3, 4)) + 3.0
    check_grad(lambda t: tsum(mul(t, t)), rng.normal(size=(3, 4)))
    check_grad(lambda t: tsum(div(t, Tensor(c))), rng.normal(size=(3, 4)))
    check_grad(lambda t: tsum(div(Tensor(c), add(t, 5.0))), rng.normal(size=(3, 4)))


def test_matmul_grad():
    rng = np.random.default_rng(2)
    w = Tensor(rng.normal(size=(4, 2)), requires_grad=True)

    def build(t):
        return tsum(mul(matmul(t, w), matmul(t, w)))

    check_grad(build, rng.normal(size=(3, 4)))


def test_sum_mean_axes():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(3, 4))
    check_grad(lambda t: tsum(mul(tsum(t, axis=0), tsum(t, axis=0))), x)
    check_grad(lambda t: tsum(mul(tmean(t, axis=1, keepdims=True), t)), x)
    t = Tensor(x)
    np.testing.assert_allclose(tmean(t).data, x.mean())
    np.testing.assert_allclose(tsum(t, axis=1, keepdims=True).data, x.sum(1, keepdims=True))


def test_unary_ops_grad():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(3, 4))
    check_grad(lambda t: tsum(exp(t)), x)
    check_grad(lambda t: tsum(log(add(mul(t, t), 1.0))), x)
    check_grad(lambda t: tsum(sqrt(add(mul(t, t), 2.0))), x)
    check_grad(lambda t: tsum(softplus(t)), x)
    check_grad(lambda t: tsum(neg(t)), x)


def test_leaky_relu_slopes():
    x = np.array([[-2.0, -0.5, 0.5, 3.0]])
    t = Tensor(x, requires_grad=True)
    out = leaky_relu(t)
    np.testing.assert_allclose(out.data, [[-0.02, -0.005, 0.5, 3.0]])
    tsum(out).backward()
    np.testing.assert_allclose(t.grad, [[0.01, 0.01, 1.0, 1.0]])
    # away from the kink the tape matches finite differences
    check_grad(lambda t: tsum(leaky_relu(t)), x + 0.1)


def test_clip_and_minimum_grad():
    x = np.array([[-3.0, -0.4, 0.2, 2.5]])
    t = Tensor(x, requires_grad=True)
    out = clip(t, -1.0, 1.0)
    np.testing.assert_allclose(out.data, [[-1.0, -0.4, 0.2, 1.0]])
    tsum(out).backward()
    np.testing.assert_allclose(t.grad, [[0.0, 1.0, 1.0, 0.0]])

    a = Tensor(np.array([1.0, 5.0]), requires_grad=True)
    b = Tensor(np.array([2.0, 3.0]), requires_grad=True)
    tsum(minimum(a, b)).backward()
    np.testing.assert_allclose(a.grad, [1.0, 0.0])
    np.testing.assert_allclose(b.grad, [0.0, 1.0])


def test_reshape_concat_grad():
    rng = np.random.default_rng(5)
    b = Tensor(rng.normal(size=(3, 2)), requires_grad=True)

    def build(t):
        cat = concat([t, b], axis=1)
        return tsum(mul(cat, cat))

    check_grad(build, rng.normal(size=(3, 4)))
    check_grad(lambda t: tsum(mul(reshape(t, (2, 6)), 3.0)), rng.normal(size=(3, 4)))


def test_gather_rows_accumulates_repeats():
    x = np.arange(6, dtype=np.float64).reshape(3, 2)
    t = Tensor(x, requires_grad=True)
    idx = np.array([0, 2, 0, 1])
    out = gather_rows(t, idx)
    np.testing.assert_allclose(out.data, x[idx])
    tsum(out).backward()
    np.testing.assert_allclose(t.grad, [[2.0, 2.0], [1.0, 1.0], [1.0, 1.0]])


def test_segment_sum_mean_values():
    x = np.array([[1.0], [2.0], [10.0], [4.0]])
    seg = np.array([0, 0, 2, 2])
    s = segment_sum(Tensor(x), seg, 3)
    np.testing.assert_allclose(s.data, [[3.0], [0.0], [14.0]])
    m = segment_mean(Tensor(x), seg, 3)
    np.testing.assert_allclose(m.data, [[1.5], [0.0], [7.0]])


def test_segment_min_values_and_tie_grad():
    x = np.array([[3.0], [1.0], [1.0], [5.0]])
    seg = np.array([0, 0, 0, 1])
    t = Tensor(x, requires_grad=True)
    out = segment_min(t, seg, 2)
    np.testing.assert_allclose(out.data, [[1.0], [5.0]])
    tsum(out).backward()
    # the tied minimum splits its unit of gradient evenly
    np.testing.assert_allclose(t.grad, [[0.0], [0.5], [0.5], [1.0]])


def test_segment_grads_match_numeric():
    rng = np.random.default_rng(6)
    seg = np.array([0, 0, 1, 2, 2, 2])
    x = rng.normal(size=(6, 3))

    def build_sum(t):
        s = segment_sum(t, seg, 3)
        return tsum(mul(s, s))

    def build_mean(t):
        s = segment_mean(t, seg, 3)
        return tsum(mul(s, s))

    check_grad(build_sum, x)
    check_grad(build_mean, x)
    check_grad(lambda t: tsum(segment_logsumexp(t, seg, 3)), x)


def test_segment_logsumexp_matches_dense():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(5, 2)) * 30.0  # large values: naive exp would overflow less safely
    seg = np.array([0, 0, 0, 1, 1])
    out = segment_logsumexp(Tensor(x), seg, 2)
    expect = np.stack([
        np.log(np.exp(x[:3] - x[:3].max(0)).sum(0)) + x[:3].max(0),
        np.log(np.exp(x[3:] - x[3:].max(0)).sum(0)) + x[3:].max(0),
    ])
    np.testing.assert_allclose(out.data, expect, rtol=1e-12)
    np.testing.assert_allclose(
        segment_max_data(x, seg, 2), np.stack([x[:3].max(0), x[3:].max(0)])
    )


def test_layer_norm_rows_and_grad():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(4, 6)) * 3.0 + 1.0
    out = layer_norm(Tensor(x))
    np.testing.assert_allclose(out.data.mean(1), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.data.std(1), 1.0, atol=1e-3)
    check_grad(lambda t: tsum(mul(layer_norm(t), np.arange(24.0).reshape(4, 6))), x,
               rtol=1e-4, atol=1e-6)


def test_backward_accumulates_shared_node():
    t = Tensor(np.array([2.0]), requires_grad=True)
    y = mul(t, t)  # used twice downstream
    out = tsum(add(y, mul(y, 3.0)))
    out.backward()
    np.testing.assert_allclose(t.grad, [16.0])  # d/dt 4t^2


def test_no_grad_disables_tape():
    t = Tensor(np.ones(3), requires_grad=True)
    assert grad_enabled()
    with no_grad():
        assert not grad_enabled()
        out = mul(t, 2.0)
        assert out.parents == ()
        assert out.bwd is None
    assert grad_enabled()


def test_operator_sugar():
    a = Tensor(np.array([4.0]))
    b = Tensor(np.array([2.0]))
    np.testing.assert_allclose((a + b).data, [6.0])
    np.testing.assert_allclose((a - b).data, [2.0])
    np.testing.assert_allclose((a * b).data, [8.0])
    np.testing.assert_allclose((a / b).data, [2.0])
    np.testing.assert_allclose((-a).data, [-4.0])
    np.testing.assert_allclose((1.0 - b).data, [-1.0])
    np.testing.assert_allclose((1.0 / b).data, [0.5])
    m = Tensor(np.eye(2)) @ Tensor(np.array([[1.0], [2.0]]))
    np.testing.assert_allclose(m.data, [[1.0], [2.0]])


def test_backward_requires_scalar():
    t = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(Exception):
        mul(t, 2.0).backward()
