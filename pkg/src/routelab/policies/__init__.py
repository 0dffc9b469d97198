"""Observation pipeline and the two learned routing policies."""

from .linkweight import (
    INITIAL_SIGMA,
    LinkWeightAction,
    LinkWeightInput,
    LinkWeightPolicy,
    N_BASE_FEATURES,
)
from .nexthop import (
    INITIAL_TEMPERATURE,
    NextHopAction,
    NextHopInput,
    NextHopPolicy,
)
from .observe import CLIP_SIGMA, N_FRAMES, FrameStack, RunningNorm, VectorStack

__all__ = [
    "INITIAL_SIGMA", "LinkWeightAction", "LinkWeightInput", "LinkWeightPolicy",
    "N_BASE_FEATURES", "INITIAL_TEMPERATURE", "NextHopAction", "NextHopInput",
    "NextHopPolicy", "CLIP_SIGMA", "N_FRAMES", "FrameStack", "RunningNorm",
    "VectorStack",
]
