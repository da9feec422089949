"""Bagged depth-limited decision trees for outcome probability estimation.

The ensemble's mean predicted probability of the negative outcome is the
outcome-prediction score (OP); the binary entropy of that mean, in bits, is
the total-uncertainty score (TU). TU is reported as-is, not calibrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateModelError, FitError


class DecisionTree:
    """CART-style binary classification tree (Gini impurity, midpoint
    thresholds, deterministic first-best tie-breaking).

    Nodes are stored in parallel arrays; leaves carry the class-1 fraction
    of their training samples.
    """

    def __init__(self, max_depth: int = 6, min_samples_leaf: int = 5):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        # feature < 0 marks a leaf; threshold then holds the leaf probability
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        return len(self.feature) - 1

    def fit(self, X: np.ndarray, y: np.ndarray) -> "DecisionTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or len(X) != len(y):
            raise FitError("X must be 2-D and aligned with y")
        if len(y) == 0:
            raise FitError("cannot fit a tree on zero samples")
        self._build(X, y, np.arange(len(y)), depth=0)
        return self

    def _build(self, X, y, idx, depth) -> int:
        node = self._new_node()
        sub_y = y[idx]
        p = float(sub_y.mean())
        pure = p <= 0.0 or p >= 1.0
        if depth >= self.max_depth or len(idx) < 2 * self.min_samples_leaf or pure:
            self.threshold[node] = p
            return node
        best = self._best_split(X, sub_y, idx)
        if best is None:
            self.threshold[node] = p
            return node
        j, thr = best
        mask = X[idx, j] <= thr
        left = self._build(X, y, idx[mask], depth + 1)
        right = self._build(X, y, idx[~mask], depth + 1)
        self.feature[node] = j
        self.threshold[node] = thr
        self.left[node] = left
        self.right[node] = right
        return node

    def _best_split(self, X, sub_y, idx):
        n = len(idx)
        total_pos = sub_y.sum()
        parent_gini = 1.0 - (total_pos / n) ** 2 - ((n - total_pos) / n) ** 2
        best_score = parent_gini - 1e-12
        best = None
        min_leaf = self.min_samples_leaf
        for j in range(X.shape[1]):
            x = X[idx, j]
            order = np.argsort(x, kind="stable")
            xs = x[order]
            ys = sub_y[order]
            # candidate split after position i when the value changes
            diff = xs[1:] != xs[:-1]
            if not diff.any():
                continue
            pos_left = np.cumsum(ys)[:-1]
            n_left = np.arange(1, n)
            n_right = n - n_left
            valid = diff & (n_left >= min_leaf) & (n_right >= min_leaf)
            if not valid.any():
                continue
            pos_right = total_pos - pos_left
            gini_l = 1.0 - (pos_left / n_left) ** 2 - ((n_left - pos_left) / n_left) ** 2
            gini_r = 1.0 - (pos_right / n_right) ** 2 - ((n_right - pos_right) / n_right) ** 2
            weighted = (n_left * gini_l + n_right * gini_r) / n
            weighted = np.where(valid, weighted, np.inf)
            i = int(np.argmin(weighted))
            if weighted[i] < best_score:
                best_score = float(weighted[i])
                best = (j, float((xs[i] + xs[i + 1]) / 2.0))
        return best

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Class-1 probability for each row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(len(X), dtype=float)
        stack = [(0, np.arange(len(X)))]
        while stack:
            node, rows = stack.pop()
            if len(rows) == 0:
                continue
            j = self.feature[node]
            if j < 0:
                out[rows] = self.threshold[node]
                continue
            mask = X[rows, j] <= self.threshold[node]
            stack.append((self.left[node], rows[mask]))
            stack.append((self.right[node], rows[~mask]))
        return out

    def to_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "feature": list(self.feature),
            "threshold": [float(t) for t in self.threshold],
            "left": list(self.left),
            "right": list(self.right),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        t = cls(max_depth=d["max_depth"], min_samples_leaf=d["min_samples_leaf"])
        t.feature = list(d["feature"])
        t.threshold = [float(x) for x in d["threshold"]]
        t.left = list(d["left"])
        t.right = list(d["right"])
        return t


def binary_entropy(p: float) -> float:
    """Entropy of a Bernoulli(p) in bits, with 0*log(0) taken as 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    q = 1.0 - p
    h = -(p * math.log2(p) + q * math.log2(q))
    return min(max(h, 0.0), 1.0)


@dataclass(frozen=True)
class PredictiveEstimate:
    """Outcome-prediction score and total-uncertainty score for one prefix."""

    op: float
    tu: float


def predictive_estimate(member_probs: np.ndarray) -> PredictiveEstimate:
    """Aggregate per-member negative-outcome probabilities.

    op is the ensemble mean; tu is the binary entropy (bits) of that mean.
    """
    member_probs = np.asarray(member_probs, dtype=float)
    op = float(member_probs.mean())
    return PredictiveEstimate(op=op, tu=binary_entropy(op))


class BaggedTreeEnsemble:
    """Bootstrap-aggregated trees exposing per-member and mean probabilities."""

    def __init__(self, members: list[DecisionTree]):
        if not members:
            raise FitError("ensemble needs at least one member")
        self.members = members

    @property
    def n_members(self) -> int:
        return len(self.members)

    def member_probs(self, X: np.ndarray) -> np.ndarray:
        """(n_members, n_rows) class-1 probabilities."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([t.predict_proba(X) for t in self.members])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.member_probs(X).mean(axis=0)

    def estimates(self, X: np.ndarray) -> list[PredictiveEstimate]:
        probs = self.member_probs(X)
        return [predictive_estimate(probs[:, i]) for i in range(probs.shape[1])]

    def to_dict(self) -> dict:
        return {"members": [t.to_dict() for t in self.members]}

    @classmethod
    def from_dict(cls, d: dict) -> "BaggedTreeEnsemble":
        return cls([DecisionTree.from_dict(t) for t in d["members"]])


def fit_ensemble(X: np.ndarray, y: np.ndarray, n_members: int = 10,
                 max_depth: int = 6, min_samples_leaf: int = 5,
                 rng: np.random.Generator | None = None,
                 bootstrap: bool = True) -> BaggedTreeEnsemble:
    """Fit a bagged ensemble of depth-limited trees on binary labels.

    Args:
        X: (n, d) feature matrix.
        y: (n,) binary labels in {0, 1}.
        n_members: ensemble size.
        rng: source for bootstrap draws; required when bootstrap is True.

    Raises:
        DegenerateModelError: if y contains a single class.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise DegenerateModelError(
            f"training labels are all {int(y[0]) if len(y) else '<empty>'}; "
            "a single-class sample admits no classifier"
        )
    if bootstrap and rng is None:
        raise FitError("bootstrap fitting requires an rng")
    n = len(y)
    members = []
    for _ in range(n_members):
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        tree = DecisionTree(max_depth=max_depth, min_samples_leaf=min_samples_leaf)
        tree.fit(X[idx], y[idx])
        members.append(tree)
    return BaggedTreeEnsemble(members)
