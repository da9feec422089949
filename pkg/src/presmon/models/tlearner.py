"""Two-model treatment-effect estimator.

Fits one outcome model on historically treated cases and one on untreated
cases (same learner family as the outcome ensemble) and scores the effect
of intervening as the difference of predicted positive-outcome
probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateModelError
from .ensemble import BaggedTreeEnsemble, fit_ensemble


@dataclass(frozen=True)
class CausalEstimate:
    p1: float
    p0: float

    @property
    def te(self) -> float:
        return self.p1 - self.p0


@dataclass
class TLearner:
    f1: BaggedTreeEnsemble
    f0: BaggedTreeEnsemble

    def predict_arms(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.f1.predict(X), self.f0.predict(X)

    def to_dict(self) -> dict:
        return {"f1": self.f1.to_dict(), "f0": self.f0.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TLearner":
        return cls(f1=BaggedTreeEnsemble.from_dict(d["f1"]),
                   f0=BaggedTreeEnsemble.from_dict(d["f0"]))


def fit_tlearner(X: np.ndarray, treated: np.ndarray, y_positive: np.ndarray,
                 n_members: int = 10, max_depth: int = 6,
                 min_samples_leaf: int = 5,
                 rng: np.random.Generator | None = None) -> TLearner:
    """Fit both arms.

    Args:
        X: (n, d) prefix features.
        treated: (n,) historical treatment indicator.
        y_positive: (n,) 1 where the case outcome was positive.

    Raises:
        DegenerateModelError: an arm has no training cases (or one class
            only, via the underlying ensemble fit).
    """
    X = np.asarray(X, dtype=float)
    treated = np.asarray(treated, dtype=bool)
    y_positive = np.asarray(y_positive, dtype=float)
    if not treated.any() or treated.all():
        side = "untreated" if treated.all() else "treated"
        raise DegenerateModelError(f"no {side} cases; cannot fit both arms")
    f1 = fit_ensemble(X[treated], y_positive[treated], n_members=n_members,
                      max_depth=max_depth, min_samples_leaf=min_samples_leaf, rng=rng)
    f0 = fit_ensemble(X[~treated], y_positive[~treated], n_members=n_members,
                      max_depth=max_depth, min_samples_leaf=min_samples_leaf, rng=rng)
    return TLearner(f1=f1, f0=f0)


def predict_te(model: TLearner, x: np.ndarray) -> CausalEstimate:
    """Point estimates for one prefix: p1, p0 and their difference."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p1 = float(model.f1.predict(x)[0])
    p0 = float(model.f0.predict(x)[0])
    return CausalEstimate(p1=p1, p0=p0)
