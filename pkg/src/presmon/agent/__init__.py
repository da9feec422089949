"""Online policy learning and fixed baseline policies for the replay environment."""

from .nets import MLP, Adam
from .ppo import (
    AgentConfig,
    convergence_point,
    episode_advantages,
    gain_after,
    greedy_action,
    policy_logprobs,
    ppo_loss_and_grads,
    ppo_update,
    sample_action,
)
from .baselines import (
    always_policy,
    effect_threshold_policy,
    never_policy,
    op_threshold_policy,
    oracle_policy,
    random_policy,
)
from .runner import TrainingResult, run_baseline, run_online_training

__all__ = [
    "MLP", "Adam", "AgentConfig", "episode_advantages", "policy_logprobs",
    "ppo_loss_and_grads",
    "ppo_update", "sample_action", "greedy_action", "convergence_point",
    "gain_after", "always_policy", "never_policy", "random_policy",
    "op_threshold_policy", "effect_threshold_policy", "oracle_policy",
    "TrainingResult", "run_baseline", "run_online_training",
]
