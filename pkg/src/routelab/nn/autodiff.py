"""Array-valued reverse-mode automatic differentiation.

A small tape: each Tensor wraps a float64 ndarray and optionally records
its parents plus a closure that routes the output gradient to them.
backward() on a scalar loss topologically sorts the tape and accumulates
exact gradients. A no_grad() context disables recording for cheap
rollout-time inference.

The op set is exactly what the graph-network policies need: elementwise
arithmetic with broadcasting, matmul, reductions, LeakyReLU/softplus,
clipping, concatenation, row gathering, and contiguous segment
reductions (sum/mean/min) for per-node aggregation over sorted edge
lists.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from ..errors import RuntimeFailure

_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Disable tape recording inside the block."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "grad", "parents", "bwd", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.parents: tuple = ()
        self.bwd = None
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        """Reverse-mode gradient of this scalar through the tape."""
        if self.data.size != 1:
            raise RuntimeFailure("backward() requires a scalar loss")
        if not np.isfinite(self.data).all():
            raise RuntimeFailure("non-finite loss in forward pass")
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node.bwd is not None and node.grad is not None:
                node.bwd(node.grad)

    # Operator sugar; every operator defers to the module-level ops.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(as_tensor(other), self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, bwd) -> Tensor:
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        t = Tensor(data, requires_grad=True)
        t.parents = parents
        t.bwd = bwd
        return t
    return Tensor(data)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def bwd(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g, b.data.shape))

    return _make(out, (a, b), bwd)


def neg(a) -> Tensor:
    a = as_tensor(a)

    def bwd(g):
        a._accum(-g)

    return _make(-a.data, (a,), bwd)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def bwd(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g * a.data, b.data.shape))

    return _make(out, (a, b), bwd)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def bwd(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _make(out, (a, b), bwd)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data @ b.data

    def bwd(g):
        if a.requires_grad:
            a._accum(g @ b.data.T)
        if b.requires_grad:
            b._accum(a.data.T @ g)

    return _make(out, (a, b), bwd)


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        if axis is None:
            a._accum(np.broadcast_to(g, a.data.shape).copy())
            return
        gg = g if keepdims else np.expand_dims(g, axis)
        a._accum(np.broadcast_to(gg, a.data.shape).copy())

    return _make(out, (a,), bwd)


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.data.size
    else:
        count = a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)

    def bwd(g):
        a._accum(g * out)

    return _make(out, (a,), bwd)


def log(a) -> Tensor:
    a = as_tensor(a)
    out = np.log(a.data)

    def bwd(g):
        a._accum(g / a.data)

    return _make(out, (a,), bwd)


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)

    def bwd(g):
        a._accum(g * 0.5 / out)

    return _make(out, (a,), bwd)


def leaky_relu(a, alpha: float = 0.01) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    out = np.where(mask, a.data, alpha * a.data)

    def bwd(g):
        a._accum(g * np.where(mask, 1.0, alpha))

    return _make(out, (a,), bwd)


def softplus(a) -> Tensor:
    """log(1 + exp(x)), numerically stable; gradient is the sigmoid."""
    a = as_tensor(a)
    x = a.data
    out = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))

    def bwd(g):
        a._accum(g / (1.0 + np.exp(-x)))

    return _make(out, (a,), bwd)


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp values; gradient passes only where unclipped."""
    a = as_tensor(a)
    out = np.clip(a.data, lo, hi)
    mask = (a.data > lo) & (a.data < hi)

    def bwd(g):
        a._accum(g * mask)

    return _make(out, (a,), bwd)


def minimum(a, b) -> Tensor:
    """Elementwise min; ties route gradient to the first argument."""
    a, b = as_tensor(a), as_tensor(b)
    take_a = a.data <= b.data
    out = np.where(take_a, a.data, b.data)

    def bwd(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g * take_a, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g * ~take_a, b.data.shape))

    return _make(out, (a, b), bwd)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = a.data.reshape(shape)

    def bwd(g):
        a._accum(g.reshape(a.data.shape))

    return _make(out, (a,), bwd)


def concat(tensors: list, axis: int = 1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def bwd(g):
        pieces = np.split(g, bounds, axis=axis)
        for t, piece in zip(tensors, pieces):
            if t.requires_grad:
                t._accum(piece)

    return _make(out, tuple(tensors), bwd)


def gather_rows(a, idx: np.ndarray) -> Tensor:
    a = as_tensor(a)
    out = a.data[idx]

    def bwd(g):
        acc = np.zeros_like(a.data)
        np.add.at(acc, idx, g)
        a._accum(acc)

    return _make(out, (a,), bwd)


def _segment_bounds(seg_ids: np.ndarray, num_segments: int):
    """Row ranges per segment for a sorted segment-id vector."""
    counts = np.bincount(seg_ids, minlength=num_segments)
    ends = np.cumsum(counts)
    starts = ends - counts
    return counts, starts, ends


def segment_sum(a, seg_ids: np.ndarray, num_segments: int) -> Tensor:
    """Per-segment sum of rows; seg_ids must be sorted ascending."""
    a = as_tensor(a)
    counts, starts, _ = _segment_bounds(seg_ids, num_segments)
    shape = (num_segments,) + a.data.shape[1:]
    out = np.zeros(shape)
    nonempty = counts > 0
    if nonempty.any():
        out[nonempty] = np.add.reduceat(a.data, starts[nonempty], axis=0)

    def bwd(g):
        a._accum(g[seg_ids])

    return _make(out, (a,), bwd)


def segment_mean(a, seg_ids: np.ndarray, num_segments: int) -> Tensor:
    """Per-segment mean of rows; empty segments produce zeros."""
    a = as_tensor(a)
    counts = np.bincount(seg_ids, minlength=num_segments).astype(np.float64)
    denom = np.maximum(counts, 1.0).reshape((num_segments,) + (1,) * (a.data.ndim - 1))
    return mul(segment_sum(a, seg_ids, num_segments), Tensor(1.0 / denom))


def segment_min(a, seg_ids: np.ndarray, num_segments: int) -> Tensor:
    """Per-segment minimum of rows; empty segments produce zeros.

    Gradient is split evenly among positions attaining the minimum.
    """
    a = as_tensor(a)
    counts, starts, _ = _segment_bounds(seg_ids, num_segments)
    shape = (num_segments,) + a.data.shape[1:]
    out = np.zeros(shape)
    nonempty = counts > 0
    if nonempty.any():
        out[nonempty] = np.minimum.reduceat(a.data, starts[nonempty], axis=0)

    def bwd(g):
        is_min = (a.data == out[seg_ids]).astype(np.float64)
        ties = np.zeros(shape)
        np.add.at(ties, seg_ids, is_min)
        weights = is_min / np.maximum(ties[seg_ids], 1.0)
        a._accum(g[seg_ids] * weights)

    return _make(out, (a,), bwd)


def segment_max_data(x: np.ndarray, seg_ids: np.ndarray, num_segments: int) -> np.ndarray:
    """Plain-array per-segment maximum (shift constant for logsumexp)."""
    counts, starts, _ = _segment_bounds(seg_ids, num_segments)
    shape = (num_segments,) + x.shape[1:]
    out = np.zeros(shape)
    nonempty = counts > 0
    if nonempty.any():
        out[nonempty] = np.maximum.reduceat(x, starts[nonempty], axis=0)
    return out


def segment_logsumexp(a, seg_ids: np.ndarray, num_segments: int) -> Tensor:
    """Per-segment log-sum-exp with the usual max-shift stabilization."""
    a = as_tensor(a)
    shift = segment_max_data(a.data, seg_ids, num_segments)
    shifted = add(a, Tensor(-shift[seg_ids]))
    return add(log(segment_sum(exp(shifted), seg_ids, num_segments)), Tensor(shift))


def layer_norm(a, eps: float = 1e-5) -> Tensor:
    """Normalize each row to zero mean, unit variance (no affine terms)."""
    a = as_tensor(a)
    mu = tmean(a, axis=1, keepdims=True)
    centered = a - mu
    var = tmean(mul(centered, centered), axis=1, keepdims=True)
    return div(centered, sqrt(add(var, eps)))
