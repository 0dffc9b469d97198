"""Dense layers and the two-layer MLP block used throughout the models."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, add, leaky_relu, matmul
from .params import ParamStore, orthogonal_init

LEAKY_SLOPE = 0.01
ORTHO_GAIN = float(np.sqrt(2.0))


class Dense:
    """Affine map with orthogonally initialized weights and zero bias.

    A zero-width input is legal: the layer then reduces to its bias row,
    which lets feature-less entities still carry a learned embedding.
    """

    def __init__(self, store: ParamStore, name: str, in_dim: int, out_dim: int,
                 rng: np.random.Generator, gain: float = ORTHO_GAIN):
        if in_dim > 0:
            w0 = orthogonal_init(rng, (in_dim, out_dim), gain)
        else:
            w0 = np.zeros((0, out_dim))
        self.w = store.add(f"{name}.w", w0)
        self.b = store.add(f"{name}.b", np.zeros(out_dim))

    def __call__(self, x: Tensor) -> Tensor:
        return add(matmul(x, self.w), self.b)


class MLP2:
    """Dense -> LeakyReLU -> Dense."""

    def __init__(self, store: ParamStore, name: str, in_dim: int, hidden_dim: int,
                 out_dim: int, rng: np.random.Generator):
        self.fc1 = Dense(store, f"{name}.fc1", in_dim, hidden_dim, rng)
        self.fc2 = Dense(store, f"{name}.fc2", hidden_dim, out_dim, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(leaky_relu(self.fc1(x), LEAKY_SLOPE))
