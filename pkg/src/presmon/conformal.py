"""Split-conformal calibration for classification sets and regression
intervals.

Classification uses class-conditional (Mondrian) inductive conformal
prediction with nonconformity score 1 - p_hat(y | x); a label joins the
prediction set when its p-value exceeds the chosen alpha. Regression uses
absolute residuals with the finite-sample quantile index
ceil((n_cal + 1) * (1 - alpha)), clamped to the largest residual when the
index exceeds the calibration size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError
from .eventlog import NEGATIVE, POSITIVE


@dataclass(frozen=True)
class ConformalSet:
    contains_negative: bool
    contains_positive: bool


@dataclass(frozen=True)
class ConformalInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise CalibrationError(f"interval lower bound {self.lo} above upper {self.hi}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return (self.lo + self.hi) / 2.0


@dataclass(frozen=True)
class ClassifCalibration:
    """Sorted nonconformity scores per outcome class."""

    scores_negative: np.ndarray
    scores_positive: np.ndarray

    def scores_for(self, label: int) -> np.ndarray:
        return self.scores_negative if label == NEGATIVE else self.scores_positive

    def to_dict(self) -> dict:
        return {
            "scores_negative": [float(s) for s in self.scores_negative],
            "scores_positive": [float(s) for s in self.scores_positive],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifCalibration":
        return cls(
            scores_negative=np.array(d["scores_negative"], dtype=float),
            scores_positive=np.array(d["scores_positive"], dtype=float),
        )


@dataclass(frozen=True)
class RegrCalibration:
    """Sorted absolute residuals; widths are resolved per query alpha."""

    residuals: np.ndarray

    def to_dict(self) -> dict:
        return {"residuals": [float(r) for r in self.residuals]}

    @classmethod
    def from_dict(cls, d: dict) -> "RegrCalibration":
        return cls(residuals=np.array(d["residuals"], dtype=float))


def calibrate_classifier(op_values: np.ndarray, labels: np.ndarray) -> ClassifCalibration:
    """Build per-class score lists from calibration predictions.

    Args:
        op_values: predicted negative-outcome probabilities on the
            calibration split.
        labels: true outcomes (NEGATIVE/POSITIVE).

    Raises:
        CalibrationError: some class has zero calibration examples.
    """
    op_values = np.asarray(op_values, dtype=float)
    labels = np.asarray(labels, dtype=int)
    neg_mask = labels == NEGATIVE
    if not neg_mask.any() or neg_mask.all():
        missing = "negative" if not neg_mask.any() else "positive"
        raise CalibrationError(f"calibration split has no {missing}-outcome cases")
    # score(x, y) = 1 - p_hat(y | x); p_hat(neg) = op, p_hat(pos) = 1 - op
    scores_neg = 1.0 - op_values[neg_mask]
    scores_pos = op_values[~neg_mask]
    return ClassifCalibration(
        scores_negative=np.sort(scores_neg),
        scores_positive=np.sort(scores_pos),
    )


def class_p_value(cal: ClassifCalibration, label: int, score: float) -> float:
    """(#{calibration scores of that class >= score} + 1) / (n_class + 1)."""
    scores = cal.scores_for(label)
    n = len(scores)
    ge = n - int(np.searchsorted(scores, score, side="left"))
    return (ge + 1) / (n + 1)


def conformal_set(cal: ClassifCalibration, op: float, alpha: float) -> ConformalSet:
    """Prediction set at miscoverage alpha for one prefix's op estimate."""
    _check_alpha(alpha)
    p_neg = class_p_value(cal, NEGATIVE, 1.0 - op)
    p_pos = class_p_value(cal, POSITIVE, op)
    return ConformalSet(contains_negative=p_neg > alpha, contains_positive=p_pos > alpha)


def calibrate_regressor(predictions: np.ndarray, targets: np.ndarray) -> RegrCalibration:
    """Absolute-residual calibration from aligned predictions and targets.

    Raises:
        CalibrationError: zero calibration pairs.
    """
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if len(predictions) != len(targets):
        raise CalibrationError("predictions and targets must be aligned")
    if len(predictions) == 0:
        raise CalibrationError("regression calibration needs at least one pair")
    return RegrCalibration(residuals=np.sort(np.abs(targets - predictions)))


def half_width(cal: RegrCalibration, alpha: float) -> float:
    """Interval half-width at miscoverage alpha.

    Uses the 1-based order statistic at ceil((n + 1) * (1 - alpha)); when
    that index exceeds n (alpha below 1/(n + 1)) the largest residual is
    used, a deliberate finite stand-in for the infinite-width ideal.
    """
    _check_alpha(alpha)
    n = len(cal.residuals)
    idx = math.ceil((n + 1) * (1.0 - alpha))
    idx = min(idx, n)
    return float(cal.residuals[idx - 1])


def conformal_interval(cal: RegrCalibration, point: float, alpha: float,
                       lo_clamp: float | None = None) -> ConformalInterval:
    """Symmetric interval around a point prediction, optionally clamped below."""
    q = half_width(cal, alpha)
    lo = point - q
    hi = point + q
    if lo_clamp is not None:
        lo = max(lo, lo_clamp)
        hi = max(hi, lo_clamp)
    return ConformalInterval(lo=lo, hi=hi)


def conformal_te(cal1: RegrCalibration, cal0: RegrCalibration, p1: float,
                 p0: float, alpha: float) -> ConformalInterval:
    """Treatment-effect interval from two arm calibrations.

    Each arm gets level 1 - alpha/2 so the difference keeps at least
    1 - alpha joint coverage (Bonferroni). Arm intervals are clamped to
    [0, 1] as probabilities; the difference is clamped to [-1, 1].
    """
    _check_alpha(alpha)
    q1 = half_width(cal1, alpha / 2.0)
    q0 = half_width(cal0, alpha / 2.0)
    p1_lo, p1_hi = max(p1 - q1, 0.0), min(p1 + q1, 1.0)
    p0_lo, p0_hi = max(p0 - q0, 0.0), min(p0 + q0, 1.0)
    lo = max(p1_lo - p0_hi, -1.0)
    hi = min(p1_hi - p0_lo, 1.0)
    return ConformalInterval(lo=lo, hi=hi)


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise CalibrationError(f"alpha must be in (0, 1), got {alpha}")


@dataclass(frozen=True)
class CohortEffectBounds:
    """Average effect bounds per cohort of the untreated-outcome score.

    Cohorts are quantile bins of p0 over the calibration split; each bin
    carries the mean of its members' per-case effect-interval endpoints.
    A coarse stand-in for externally supplied subgroup effect bounds.
    """

    edges: np.ndarray  # interior cut points, length n_bins - 1
    lo: np.ndarray
    hi: np.ndarray

    def lookup(self, p0: float) -> tuple[float, float]:
        b = int(np.searchsorted(self.edges, p0, side="right"))
        return float(self.lo[b]), float(self.hi[b])

    def to_dict(self) -> dict:
        return {"edges": [float(e) for e in self.edges],
                "lo": [float(v) for v in self.lo],
                "hi": [float(v) for v in self.hi]}

    @classmethod
    def from_dict(cls, d: dict) -> "CohortEffectBounds":
        return cls(edges=np.array(d["edges"], dtype=float),
                   lo=np.array(d["lo"], dtype=float),
                   hi=np.array(d["hi"], dtype=float))


def cohort_effect_bounds(p0_values: np.ndarray, te_lows: np.ndarray,
                         te_highs: np.ndarray, n_bins: int = 5) -> CohortEffectBounds:
    """Group calibration cases into p0 quantile bins and average their
    effect-interval endpoints per bin."""
    p0_values = np.asarray(p0_values, dtype=float)
    te_lows = np.asarray(te_lows, dtype=float)
    te_highs = np.asarray(te_highs, dtype=float)
    if len(p0_values) == 0:
        raise CalibrationError("cohort bounds need a non-empty calibration")
    qs = np.linspace(0, 1, n_bins + 1)[1:-1]
    edges = np.quantile(p0_values, qs)
    bins = np.searchsorted(edges, p0_values, side="right")
    lo = np.full(n_bins, float(te_lows.mean()))
    hi = np.full(n_bins, float(te_highs.mean()))
    for b in range(n_bins):
        mask = bins == b
        if mask.any():
            lo[b] = float(te_lows[mask].mean())
            hi[b] = float(te_highs[mask].mean())
    return CohortEffectBounds(edges=edges, lo=lo, hi=hi)
