"""Potential-outcome imputation for replay.

Replay needs both potential outcomes per test case: the observed arm is
copied from the log, the unobserved arm is drawn once from the fitted
arm model's probability and frozen for the whole simulation. Synthetic
logs generated with ground-truth counterfactuals bypass imputation
entirely.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DataError
from .eventlog import NEGATIVE, POSITIVE, Case, EventLog
from .models import TLearner

EFFECT_POSITIVE = 1
EFFECT_ZERO = 0
EFFECT_NEGATIVE = -1


@dataclass(frozen=True)
class PotentialOutcomes:
    y0: int
    y1: int
    realized_arm: int  # 1 when the case was historically treated

    @property
    def realized_outcome(self) -> int:
        return self.y1 if self.realized_arm == 1 else self.y0


def effect_sign(po: PotentialOutcomes) -> int:
    """Positive when treating flips the outcome to positive, negative when
    it flips it to negative, zero when both arms agree."""
    if po.y1 == po.y0:
        return EFFECT_ZERO
    return EFFECT_POSITIVE if po.y1 == POSITIVE else EFFECT_NEGATIVE


def impute_counterfactuals(test: EventLog, model: TLearner,
                           features_for_case: Callable[[Case], np.ndarray],
                           rng: np.random.Generator) -> dict[str, PotentialOutcomes]:
    """Impute the unobserved arm for every test case.

    The observed arm's outcome comes from the log; the other arm is a single
    Bernoulli draw from the corresponding arm model evaluated on the case's
    final prefix features. Cases are visited in canonical log order, so the
    mapping is deterministic for a given rng state.
    """
    out: dict[str, PotentialOutcomes] = {}
    for case in test:
        x = np.atleast_2d(features_for_case(case))
        if case.treated:
            y1 = case.outcome
            p0 = float(model.f0.predict(x)[0])
            y0 = POSITIVE if rng.random() < p0 else NEGATIVE
            arm = 1
        else:
            y0 = case.outcome
            p1 = float(model.f1.predict(x)[0])
            y1 = POSITIVE if rng.random() < p1 else NEGATIVE
            arm = 0
        out[case.case_id] = PotentialOutcomes(y0=y0, y1=y1, realized_arm=arm)
    return out


def write_counterfactuals(table: dict[str, PotentialOutcomes], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "y0", "y1", "realized_arm"])
        for case_id in sorted(table):
            po = table[case_id]
            w.writerow([case_id, po.y0, po.y1, po.realized_arm])


def read_counterfactuals(path: str | Path) -> dict[str, PotentialOutcomes]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"counterfactual table not found: {path}")
    out: dict[str, PotentialOutcomes] = {}
    with path.open() as fh:
        for row in csv.DictReader(fh):
            out[row["case_id"]] = PotentialOutcomes(
                y0=int(row["y0"]), y1=int(row["y1"]),
                realized_arm=int(row["realized_arm"]),
            )
    if not out:
        raise DataError(f"counterfactual table is empty: {path}")
    return out
