"""Clipped-surrogate policy optimization with analytic gradients.

The policy head emits two logits (skip, trigger); the value head one
scalar. Losses and their gradients are computed in closed form and pushed
through the network by backpropagation, so correctness is checkable
against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError
from .nets import MLP, Adam


@dataclass(frozen=True)
class AgentConfig:
    hidden: tuple = (64, 64)
    lr: float = 3e-4
    gamma: float = 0.99
    lam: float = 0.95
    clip: float = 0.2
    ent_coef: float = 0.01
    vf_coef: float = 0.5
    epochs: int = 4
    episodes_per_update: int = 1

    def to_dict(self) -> dict:
        return {"hidden": list(self.hidden), "lr": self.lr, "gamma": self.gamma,
                "lam": self.lam, "clip": self.clip, "ent_coef": self.ent_coef,
                "vf_coef": self.vf_coef, "epochs": self.epochs,
                "episodes_per_update": self.episodes_per_update}

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        kw = dict(d)
        if "hidden" in kw:
            kw["hidden"] = tuple(kw["hidden"])
        return cls(**kw)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def policy_logprobs(policy: MLP, obs: np.ndarray):
    logits, cache = policy.forward(obs)
    return _log_softmax(logits), cache


def sample_action(policy: MLP, obs: np.ndarray, rng: np.random.Generator):
    """Draw one action for a single observation; returns (action, logp)."""
    logp, _ = policy_logprobs(policy, np.atleast_2d(obs))
    p = np.exp(logp[0])
    a = int(rng.random() < p[1])
    return a, float(logp[0, a])


def greedy_action(policy: MLP, obs: np.ndarray) -> int:
    """Highest-probability action; exact ties resolve to action 0."""
    logp, _ = policy_logprobs(policy, np.atleast_2d(obs))
    return int(np.argmax(logp[0]))


def episode_advantages(rewards: np.ndarray, values: np.ndarray,
                       gamma: float, lam: float):
    """Generalized advantage estimates for one finished episode.

    The value after the terminal step is zero. Returns (advantages,
    value_targets).
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    n = rewards.shape[0]
    adv = np.zeros(n)
    carry = 0.0
    for t in range(n - 1, -1, -1):
        next_v = values[t + 1] if t + 1 < n else 0.0
        delta = rewards[t] + gamma * next_v - values[t]
        carry = delta + gamma * lam * carry
        adv[t] = carry
    return adv, adv + values


def ppo_loss_and_grads(policy: MLP, value: MLP, obs: np.ndarray,
                       actions: np.ndarray, old_logp: np.ndarray,
                       advantages: np.ndarray, value_targets: np.ndarray,
                       clip: float = 0.2, ent_coef: float = 0.01,
                       vf_coef: float = 0.5):
    """Loss terms and parameter gradients for one batch.

    loss = -mean(clipped surrogate) - ent_coef * mean(entropy)
           + vf_coef * mean((v - target)^2)

    Returns (metrics dict, policy grads, value grads) where each grads item
    is the (weight_grads, bias_grads) pair the optimizer consumes.
    """
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    actions = np.asarray(actions, dtype=int)
    old_logp = np.asarray(old_logp, dtype=float)
    advantages = np.asarray(advantages, dtype=float)
    value_targets = np.asarray(value_targets, dtype=float)
    n = obs.shape[0]

    logp, p_cache = policy_logprobs(policy, obs)
    probs = np.exp(logp)
    idx = np.arange(n)
    logp_a = logp[idx, actions]
    ratio = np.exp(logp_a - old_logp)
    clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip)
    unclipped_term = ratio * advantages
    clipped_term = clipped * advantages
    surrogate = np.minimum(unclipped_term, clipped_term)
    entropy = -(probs * logp).sum(axis=1)

    v_out, v_cache = value.forward(obs)
    v = v_out[:, 0]
    v_err = v - value_targets

    pg_loss = -float(surrogate.mean())
    ent_loss = -float(entropy.mean())
    v_loss = float((v_err ** 2).mean())
    loss = pg_loss + ent_coef * ent_loss + vf_coef * v_loss

    # gradient of -surrogate wrt logits: flows through ratio only where the
    # minimum selects the unclipped term
    active = (unclipped_term <= clipped_term).astype(float)
    onehot = np.zeros_like(probs)
    onehot[idx, actions] = 1.0
    d_logits = -(active * ratio * advantages)[:, None] * (onehot - probs) / n
    # gradient of -entropy wrt logits
    d_logits += ent_coef * probs * (logp + entropy[:, None]) / n
    p_wg, p_bg = policy.backward(p_cache, d_logits)

    d_v = (vf_coef * 2.0 * v_err / n)[:, None]
    v_wg, v_bg = value.backward(v_cache, d_v)

    metrics = {"loss": loss, "pg_loss": pg_loss, "v_loss": v_loss,
               "entropy": float(entropy.mean()),
               "clip_fraction": float((np.abs(ratio - 1.0) > clip).mean())}
    return metrics, (p_wg, p_bg), (v_wg, v_bg)


def ppo_update(policy: MLP, value: MLP, opt_p: Adam, opt_v: Adam,
               obs, actions, old_logp, advantages, value_targets,
               config: AgentConfig) -> dict:
    """Run the configured number of epochs over one batch. Returns the
    metrics of the last epoch."""
    metrics = {}
    for _ in range(config.epochs):
        metrics, pg, vg = ppo_loss_and_grads(
            policy, value, obs, actions, old_logp, advantages, value_targets,
            clip=config.clip, ent_coef=config.ent_coef, vf_coef=config.vf_coef)
        if not np.isfinite(metrics["loss"]):
            raise TrainingError("non-finite loss during policy update",
                                diagnostics=metrics)
        flat = np.concatenate([MLP.flatten_grads(*pg), MLP.flatten_grads(*vg)])
        if not np.all(np.isfinite(flat)):
            raise TrainingError("non-finite gradient during policy update",
                                diagnostics=metrics)
        opt_p.step(policy, *pg)
        opt_v.step(value, *vg)
    return metrics


def convergence_point(cumulative) -> int | None:
    """First index from which the cumulative gain curve stays positive.

    None when the curve is not positive at the end (or never positive).
    """
    curve = np.asarray(list(cumulative), dtype=float)
    if curve.size == 0 or curve[-1] <= 0:
        return None
    nonpos = np.nonzero(curve <= 0)[0]
    return int(nonpos[-1] + 1) if nonpos.size else 0


def gain_after(cumulative, start: int) -> float:
    """Total gain accumulated from episode index ``start`` to the end."""
    curve = np.asarray(list(cumulative), dtype=float)
    base = curve[start - 1] if start > 0 else 0.0
    return float(curve[-1] - base)
