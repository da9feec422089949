"""Fixed comparison policies.

Each factory returns a callable mapping the environment to an action, so
baselines and the learned agent drive the replay through one interface.
"""

from __future__ import annotations

import numpy as np

from ..counterfactual import PotentialOutcomes
from ..eventlog import NEGATIVE, POSITIVE


def always_policy():
    return lambda env: 1


def never_policy():
    return lambda env: 0


def random_policy(p: float, rng: np.random.Generator):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"trigger probability must be in [0, 1], got {p}")
    return lambda env: int(rng.random() < p)


def op_threshold_policy(tau: float):
    """Trigger when the estimated probability of a negative outcome is at
    least tau."""
    return lambda env: int(env.point().op >= tau)


def effect_threshold_policy(tau: float):
    """Trigger when the midpoint of the effect interval is at least tau."""
    def policy(env):
        pt = env.point()
        return int(0.5 * (pt.cte_lo + pt.cte_hi) >= tau)
    return policy


def oracle_policy(po_table: dict[str, PotentialOutcomes]):
    """Hindsight greedy: trigger exactly when a free resource would flip
    this case from a negative to a positive outcome and it has not already
    been treated."""
    def policy(env):
        pt = env.point()
        po = po_table[pt.case_id]
        good = po.y0 == NEGATIVE and po.y1 == POSITIVE
        free = env.state().component("eta") > 0.0
        return int(good and free and not env.executed(pt.case_id))
    return policy
