"""Minimal neural stack: autodiff, layers, message passing, Adam."""

from .autodiff import (
    Tensor,
    add,
    as_tensor,
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
from .layers import LEAKY_SLOPE, ORTHO_GAIN, MLP2, Dense
from .mpn import LATENT_DIM, N_ROUNDS, GraphBatch, MessagePassingCore
from .optim import Adam, clip_grad_norm
from .params import ParamStore, orthogonal_init

__all__ = [
    "Tensor", "add", "as_tensor", "clip", "concat", "div", "exp",
    "gather_rows", "grad_enabled", "layer_norm", "leaky_relu", "log",
    "matmul", "minimum", "mul", "neg", "no_grad", "reshape", "segment_logsumexp",
    "segment_max_data", "segment_mean", "segment_min", "segment_sum",
    "softplus", "sqrt", "tmean", "tsum",
    "LEAKY_SLOPE", "ORTHO_GAIN", "MLP2", "Dense",
    "LATENT_DIM", "N_ROUNDS", "GraphBatch", "MessagePassingCore",
    "Adam", "clip_grad_norm", "ParamStore", "orthogonal_init",
]
