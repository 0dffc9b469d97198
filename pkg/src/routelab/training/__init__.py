"""Policy-gradient training over the packet and fluid environments."""

from .gae import gae_advantages
from .loop import (
    CURVE_COLUMNS,
    TrainConfig,
    architecture_hash,
    config_hash,
    default_cache_root,
    load_checkpoint,
    make_policy,
    read_curve,
    rollout_episode,
    save_checkpoint,
    train,
    train_cached,
    write_curve,
)
from .ppo import decision_log_probs, ppo_losses, ppo_update
from .rewards import (
    DELAY_PENALTY_SCALE,
    DROP_PENALTY_SCALE,
    OBJECTIVES,
    compute_reward,
    fluid_reward,
    objective_weights,
    reward_components,
)

__all__ = [
    "CURVE_COLUMNS", "TrainConfig", "architecture_hash", "config_hash",
    "default_cache_root", "load_checkpoint", "make_policy", "read_curve",
    "rollout_episode", "save_checkpoint", "train", "train_cached",
    "write_curve", "decision_log_probs", "ppo_losses", "ppo_update",
    "gae_advantages",
    "DELAY_PENALTY_SCALE", "DROP_PENALTY_SCALE",
    "OBJECTIVES", "compute_reward", "fluid_reward", "objective_weights",
    "reward_components",
]
