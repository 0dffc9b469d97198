"""Step rewards assembled from monitored performance metrics.

Four primitive signals: goodput in MB (r), drop ratio (d), average
delay in seconds (a), and max link utilization (l). Composite
objectives subtract scaled penalties from goodput; the canonical
weighting is reward = r - 5*a - 0.25*d. Utilization-only training
(the fluid environment's objective) maximizes -l.
"""

from __future__ import annotations

from ..errors import ConfigurationError
from ..packetsim.state import StepMetrics

DELAY_PENALTY_SCALE = 5.0
DROP_PENALTY_SCALE = 0.25

OBJECTIVES = {
    "r": {"r": 1.0},
    "d": {"d": -DROP_PENALTY_SCALE},
    "a": {"a": -DELAY_PENALTY_SCALE},
    "l": {"l": -1.0},
    "rd": {"r": 1.0, "d": -DROP_PENALTY_SCALE},
    "ra": {"r": 1.0, "a": -DELAY_PENALTY_SCALE},
    "rda": {"r": 1.0, "a": -DELAY_PENALTY_SCALE, "d": -DROP_PENALTY_SCALE},
}


def objective_weights(objective: str) -> dict:
    try:
        return OBJECTIVES[objective]
    except KeyError:
        raise ConfigurationError(f"unknown objective: {objective}") from None


def reward_components(metrics: StepMetrics) -> dict:
    return {
        "r": metrics.goodput_mb,
        "d": metrics.drop_ratio,
        "a": metrics.avg_delay_ms / 1e3,
        "l": metrics.max_lu,
    }


def compute_reward(metrics: StepMetrics, objective: str) -> float:
    weights = objective_weights(objective)
    parts = reward_components(metrics)
    return float(sum(w * parts[k] for k, w in weights.items()))


def fluid_reward(max_lu: float) -> float:
    """Reward for the flow-level environment: utilization headroom."""
    return -float(max_lu)
