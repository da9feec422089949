from __future__ import annotations

import numpy as np
import pytest

from presmon.errors import DegenerateModelError
from presmon.models import (
    BaggedTreeEnsemble,
    DecisionTree,
    binary_entropy,
    fit_ensemble,
    predictive_estimate,
)

# Frozen oracle: -(0.3*log2(0.3) + 0.7*log2(0.7)) computed independently.
ENTROPY_AT_03 = 0.8812908992306927


def separable_data(n=400, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, size=(n, 4))
    y = (X[:, 0] > 0.5).astype(float)
    return X, y


class TestPredictiveEstimate:
    def test_half_half_gives_full_uncertainty(self):
        est = predictive_estimate(np.array([0.5, 0.5]))
        assert est.op == 0.5 and est.tu == 1.0

    def test_unanimous_certainty(self):
        est = predictive_estimate(np.array([1.0, 1.0]))
        assert est.op == 1.0 and est.tu == 0.0

    def test_frozen_entropy_value(self):
        est = predictive_estimate(np.array([0.2, 0.4]))
        assert est.op == pytest.approx(0.3)
        assert est.tu == pytest.approx(ENTROPY_AT_03, abs=1e-12)

    def test_op_is_member_mean(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            probs = rng.uniform(0, 1, size=rng.integers(1, 12))
            est = predictive_estimate(probs)
            assert est.op == pytest.approx(float(probs.mean()), abs=1e-15)

    def test_entropy_symmetric_concave_bounded(self):
        grid = np.linspace(0.0, 1.0, 101)
        vals = [binary_entropy(p) for p in grid]
        for p, h in zip(grid, vals):
            assert 0.0 <= h <= 1.0
            assert h == pytest.approx(binary_entropy(1.0 - p), abs=1e-12)
        assert vals[50] == 1.0
        assert vals[0] == 0.0 and vals[-1] == 0.0
        # concavity on the interior grid
        for i in range(1, 100):
            assert vals[i] >= (vals[i - 1] + vals[i + 1]) / 2 - 1e-12


class TestEnsembleFit:
    def test_separable_data_high_train_accuracy(self):
        X, y = separable_data()
        model = fit_ensemble(X, y, n_members=10, max_depth=4,
                             rng=np.random.default_rng(1))
        acc = ((model.predict(X) > 0.5) == (y > 0.5)).mean()
        assert acc > 0.95

    def test_identical_members_give_zero_tu_on_training_points(self):
        # Without bootstrap both members see the same sample; deep trees with
        # singleton leaves predict 0/1 on training points, so tu vanishes.
        X, y = separable_data(n=100, seed=2)
        model = fit_ensemble(X, y, n_members=2, max_depth=30, min_samples_leaf=1,
                             bootstrap=False)
        for est in model.estimates(X):
            assert est.tu == 0.0
            assert est.op in (0.0, 1.0)

    def test_single_class_labels_rejected(self):
        X = np.random.default_rng(0).uniform(size=(50, 3))
        with pytest.raises(DegenerateModelError):
            fit_ensemble(X, np.ones(50), rng=np.random.default_rng(0))

    def test_member_count(self):
        X, y = separable_data(n=120)
        model = fit_ensemble(X, y, n_members=7, rng=np.random.default_rng(5))
        assert model.n_members == 7

    def test_probabilities_bounded(self):
        X, y = separable_data(n=300, seed=4)
        model = fit_ensemble(X, y, n_members=5, rng=np.random.default_rng(6))
        fresh = np.random.default_rng(7).uniform(size=(200, 4))
        p = model.predict(fresh)
        assert np.all(p >= 0) and np.all(p <= 1)

    def test_estimates_match_member_mean(self):
        X, y = separable_data(n=200, seed=8)
        model = fit_ensemble(X, y, n_members=6, rng=np.random.default_rng(9))
        probs = model.member_probs(X[:20])
        for i, est in enumerate(model.estimates(X[:20])):
            assert est.op == pytest.approx(float(probs[:, i].mean()), abs=1e-15)
            assert est.tu == pytest.approx(binary_entropy(est.op), abs=1e-15)

    def test_deterministic_given_rng_seed(self):
        X, y = separable_data(n=150, seed=10)
        a = fit_ensemble(X, y, n_members=4, rng=np.random.default_rng(42))
        b = fit_ensemble(X, y, n_members=4, rng=np.random.default_rng(42))
        grid = np.random.default_rng(11).uniform(size=(50, 4))
        assert np.array_equal(a.predict(grid), b.predict(grid))

    def test_serialization_roundtrip(self):
        X, y = separable_data(n=150, seed=12)
        model = fit_ensemble(X, y, n_members=3, rng=np.random.default_rng(13))
        again = BaggedTreeEnsemble.from_dict(model.to_dict())
        grid = np.random.default_rng(14).uniform(size=(60, 4))
        assert np.array_equal(model.predict(grid), again.predict(grid))


class TestDecisionTree:
    def test_pure_node_becomes_leaf(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([1.0, 1.0, 1.0])
        t = DecisionTree(max_depth=3, min_samples_leaf=1).fit(X, y)
        assert np.array_equal(t.predict_proba(X), np.ones(3))

    def test_learns_threshold_split(self):
        X = np.array([[0.1], [0.2], [0.3], [0.7], [0.8], [0.9]])
        y = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
        t = DecisionTree(max_depth=2, min_samples_leaf=1).fit(X, y)
        assert np.array_equal(t.predict_proba(np.array([[0.05], [0.95]])),
                              np.array([0.0, 1.0]))

    def test_min_samples_leaf_respected(self):
        rng = np.random.default_rng(15)
        X = rng.uniform(size=(40, 2))
        y = (X[:, 0] > 0.5).astype(float)
        t = DecisionTree(max_depth=8, min_samples_leaf=5).fit(X, y)
        # count samples landing in each leaf
        leaves = {}
        for row in range(len(X)):
            node = 0
            while t.feature[node] >= 0:
                node = t.left[node] if X[row, t.feature[node]] <= t.threshold[node] else t.right[node]
            leaves[node] = leaves.get(node, 0) + 1
        assert min(leaves.values()) >= 5
