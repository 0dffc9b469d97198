"""Experiment surface: evaluation, timing, and config-driven runs."""

from .bench import BENCH_PRESETS, bench_inference
from .evaluate import (
    EVAL_EPISODES,
    BaselineApproach,
    EvalConfig,
    PolicyApproach,
    episode_seeds,
    evaluate_approaches,
    pooled_episode_metric,
    run_episode,
    table_change_fraction,
)
from .experiment import resolve_plan, run_experiment

__all__ = [
    "BENCH_PRESETS", "bench_inference", "EVAL_EPISODES", "BaselineApproach",
    "EvalConfig", "PolicyApproach", "episode_seeds", "evaluate_approaches",
    "pooled_episode_metric", "run_episode", "table_change_fraction",
    "resolve_plan", "run_experiment",
]
