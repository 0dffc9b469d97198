"""Generalized advantage estimation over fixed-length episodes."""

from __future__ import annotations

import numpy as np


def gae_advantages(rewards: np.ndarray, values: np.ndarray, gamma: float,
                   lam: float, bootstrap: float = 0.0):
    """Advantages and returns for one episode's reward/value sequences.

    The value after the final step is the bootstrap argument (0 for a
    terminal cut). Returns are advantages plus the value baseline.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    t_len = len(rewards)
    adv = np.zeros(t_len)
    carry = 0.0
    next_value = bootstrap
    for t in range(t_len - 1, -1, -1):
        delta = rewards[t] + gamma * next_value - values[t]
        carry = delta + gamma * lam * carry
        adv[t] = carry
        next_value = values[t]
    return adv, adv + values

