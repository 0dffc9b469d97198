"""Clipped-surrogate policy updates over rollout batches.

Both policies factor one environment step into many elementary
decisions: a next hop for every (router, destination) pair, or a weight
draw for every directed edge. The clipped ratio is formed per decision,
each decision sharing its step's advantage; a joint ratio over the
whole step would cap the step's action distribution at one clip radius
of movement per iteration no matter how many decisions it contains,
which freezes learning on all but the smallest graphs.
"""

from __future__ import annotations

import numpy as np

from ..errors import RuntimeFailure
from ..nn import Tensor, clip, exp, minimum, mul, neg, no_grad, tmean
from ..nn.optim import Adam, clip_grad_norm


def _tensor_max(a, b):
    return neg(minimum(neg(a), neg(b)))


def ppo_losses(logp, decision_graph: np.ndarray, value,
               old_logp: np.ndarray, old_value: np.ndarray,
               advantages: np.ndarray, returns: np.ndarray,
               clip_ratio: float):
    """Clipped policy surrogate and clipped value error for a minibatch.

    logp is the (D, 1) per-decision tensor from evaluate_actions with
    decision_graph mapping decisions to transitions; value is (G, 1).
    The numpy arguments are rollout-time records. Both objectives use
    the same clip radius.
    """
    col = (-1, 1)
    if logp.data.shape != (len(decision_graph), 1):
        raise RuntimeFailure(
            f"per-decision log-probs must be ({len(decision_graph)}, 1), "
            f"got {logp.data.shape}")
    adv = Tensor(advantages[decision_graph].reshape(col))
    ratio = exp(logp - Tensor(old_logp.reshape(col)))
    surr = minimum(mul(ratio, adv),
                   mul(clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio), adv))
    loss_policy = neg(tmean(surr))

    ret = Tensor(returns.reshape(col))
    v_old = Tensor(old_value.reshape(col))
    v_clip = v_old + clip(value - v_old, -clip_ratio, clip_ratio)
    err = value - ret
    err_clip = v_clip - ret
    loss_value = tmean(_tensor_max(mul(err, err), mul(err_clip, err_clip)))
    return loss_policy, loss_value


def decision_log_probs(policy, inputs: list, actions: list,
                       chunk: int = 400) -> list:
    """Per-decision log-prob arrays for each transition, without grads.

    Evaluated under the current parameters; called before the update
    phase so every minibatch clips against the behavior distribution.
    """
    out = []
    with no_grad():
        for start in range(0, len(inputs), chunk):
            sub_in = inputs[start:start + chunk]
            sub_act = actions[start:start + chunk]
            logp, dgraph, _, _ = policy.evaluate_actions(sub_in, sub_act)
            flat = logp.data.reshape(-1)
            counts = np.bincount(dgraph, minlength=len(sub_in))
            bounds = np.concatenate([[0], np.cumsum(counts)])
            for g in range(len(sub_in)):
                out.append(flat[bounds[g]:bounds[g + 1]])
    return out


def ppo_update(policy, optimizer: Adam, inputs: list, actions: list,
               old_value: np.ndarray, advantages: np.ndarray,
               returns: np.ndarray, epochs: int, minibatch: int,
               clip_ratio: float, value_coef: float, grad_clip: float,
               rng: np.random.Generator) -> dict:
    """Run the epoch/minibatch update phase over one iteration's batch.

    Every transition is visited exactly once per epoch. Returns mean
    loss statistics across all minibatch steps.
    """
    n = len(inputs)
    if n % minibatch != 0:
        raise RuntimeFailure("minibatch size must divide the batch size")
    old_logp = decision_log_probs(policy, inputs, actions)
    pol_losses, val_losses = [], []
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, minibatch):
            idx = perm[start:start + minibatch]
            logp, dgraph, value, _ = policy.evaluate_actions(
                [inputs[i] for i in idx], [actions[i] for i in idx])
            old_d = np.concatenate([old_logp[i] for i in idx])
            loss_policy, loss_value = ppo_losses(
                logp, dgraph, value, old_d, old_value[idx],
                advantages[idx], returns[idx], clip_ratio)
            total = loss_policy + mul(loss_value, value_coef)
            if not np.isfinite(total.data):
                raise RuntimeFailure(
                    f"non-finite PPO loss (policy={loss_policy.data}, "
                    f"value={loss_value.data})")
            policy.store.zero_grad()
            total.backward()
            clip_grad_norm(policy.store, grad_clip)
            optimizer.step()
            pol_losses.append(float(loss_policy.data))
            val_losses.append(float(loss_value.data))
    return {
        "loss_policy": float(np.mean(pol_losses)),
        "loss_value": float(np.mean(val_losses)),
    }
