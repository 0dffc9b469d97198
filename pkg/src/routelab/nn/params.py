"""Named trainable parameters with flat views and npz checkpoints."""

from __future__ import annotations

import numpy as np

from ..errors import RuntimeFailure
from .autodiff import Tensor


def orthogonal_init(rng: np.random.Generator, shape: tuple, gain: float) -> np.ndarray:
    """Orthogonal weight matrix scaled by gain, via QR of a Gaussian."""
    rows, cols = shape
    flat = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    # Sign-fix the diagonal so the distribution is uniform over orthogonals.
    q *= np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


class ParamStore:
    """Ordered registry of named parameter tensors."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise RuntimeFailure(f"duplicate parameter name: {name}")
        t = Tensor(np.asarray(value, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list:
        return list(self._params)

    def tensors(self) -> list:
        return list(self._params.values())

    def n_scalars(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def flat_values(self) -> np.ndarray:
        return np.concatenate([t.data.ravel() for t in self._params.values()])

    def set_flat_values(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.n_scalars():
            raise RuntimeFailure("flat vector size mismatch")
        pos = 0
        for t in self._params.values():
            n = t.data.size
            t.data = flat[pos:pos + n].reshape(t.data.shape).copy()
            pos += n

    def flat_grads(self) -> np.ndarray:
        parts = []
        for t in self._params.values():
            if t.grad is None:
                parts.append(np.zeros(t.data.size))
            else:
                parts.append(t.grad.ravel())
        return np.concatenate(parts)

    def save(self, path: str) -> None:
        np.savez(path, **{k: v.data for k, v in self._params.items()})

    def load(self, path: str) -> None:
        with np.load(path) as blob:
            names = set(blob.files)
            expected = set(self._params)
            if names != expected:
                raise RuntimeFailure("checkpoint parameter names do not match")
            for name, t in self._params.items():
                value = blob[name]
                if value.shape != t.data.shape:
                    raise RuntimeFailure(f"checkpoint shape mismatch for {name}")
                t.data = value.astype(np.float64)
