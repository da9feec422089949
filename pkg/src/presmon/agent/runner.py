"""Drive the replay environment with a fixed policy or online learning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..simenv import ReplayEnvironment
from .nets import MLP, Adam
from .ppo import (
    AgentConfig,
    episode_advantages,
    ppo_update,
    sample_action,
)


def run_baseline(env: ReplayEnvironment, policy) -> ReplayEnvironment:
    """Step a fixed policy through the whole replay."""
    while not env.finished:
        env.step(policy(env))
    return env


@dataclass
class TrainingResult:
    policy: MLP
    value: MLP
    n_updates: int
    metrics_history: list = field(repr=False, default_factory=list)


def run_online_training(env: ReplayEnvironment, config: AgentConfig,
                        rng: np.random.Generator,
                        policy: MLP | None = None,
                        value: MLP | None = None) -> TrainingResult:
    """Learn while replaying: sample actions, and after every
    ``episodes_per_update`` finished cases run a policy update on their
    transitions.

    A case's decision points form one trajectory even when other cases'
    points interleave between them in global time.
    """
    obs_dim = len(env.state().observed)
    if policy is None:
        policy = MLP(obs_dim, 2, hidden=config.hidden, rng=rng)
    if value is None:
        value = MLP(obs_dim, 1, hidden=config.hidden, rng=rng)
    opt_p = Adam(policy, lr=config.lr)
    opt_v = Adam(value, lr=config.lr)

    open_traj: dict[str, list] = {}
    ready: list[tuple] = []
    history: list[dict] = []
    n_updates = 0

    def flush():
        nonlocal n_updates
        obs_b, act_b, logp_b, adv_b, tgt_b = [], [], [], [], []
        for traj in ready:
            obs, acts, logps, values, rewards = traj
            adv, tgt = episode_advantages(np.array(rewards), np.array(values),
                                          config.gamma, config.lam)
            obs_b.extend(obs)
            act_b.extend(acts)
            logp_b.extend(logps)
            adv_b.extend(adv)
            tgt_b.extend(tgt)
        metrics = ppo_update(policy, value, opt_p, opt_v,
                             np.array(obs_b), np.array(act_b),
                             np.array(logp_b), np.array(adv_b),
                             np.array(tgt_b), config)
        history.append(metrics)
        n_updates += 1
        ready.clear()

    while not env.finished:
        pt = env.point()
        obs = env.state().observed.copy()
        a, logp = sample_action(policy, obs, rng)
        v_out, _ = value.forward(obs)
        r, episode = env.step(a)
        traj = open_traj.setdefault(pt.case_id, ([], [], [], [], []))
        traj[0].append(obs)
        traj[1].append(a)
        traj[2].append(logp)
        traj[3].append(float(v_out[0, 0]))
        traj[4].append(r)
        if episode is not None:
            ready.append(open_traj.pop(pt.case_id))
            if len(ready) >= config.episodes_per_update:
                flush()
    if ready:
        flush()
    return TrainingResult(policy=policy, value=value, n_updates=n_updates,
                          metrics_history=history)
