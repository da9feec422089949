"""Synthetic event logs with known potential outcomes.

Cases arrive as a Poisson stream. Each case draws numeric attributes, a
treatment arm, and one latent uniform that fixes both potential outcomes
through a monotone coupling: the case ends positively under an arm exactly
when the latent falls below that arm's positive-outcome probability. The
log records the realized trace; the untouched pair (y0, y1) is returned
alongside so replays can score either action without imputation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .counterfactual import PotentialOutcomes
from .errors import ConfigError
from .eventlog import (
    NEGATIVE,
    POSITIVE,
    Case,
    CleaningReport,
    Event,
    EventLog,
    LogConfig,
    _canonical_order,
)
from .rng import substream

START_ACTIVITY = "register"
MID_ACTIVITIES = ("review", "update", "assess", "contact")
END_POSITIVE = "end_positive"
END_NEGATIVE = "end_negative"
TREATMENT_ACTIVITY = "offer_support"
RESOURCES = ("r1", "r2", "r3", "r4", "r5")
CHANNELS = ("web", "phone", "mail")


@dataclass(frozen=True)
class ProbRule:
    """Probability as a function of the first case attribute.

    kind "constant": always ``value``. kind "step": ``high`` when
    x > threshold else ``low``. kind "logistic":
    1 / (1 + exp(-(intercept + slope * x))).
    """

    kind: str
    value: float = 0.0
    low: float = 0.0
    high: float = 0.0
    threshold: float = 0.5
    intercept: float = 0.0
    slope: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "step", "logistic"):
            raise ConfigError(f"unknown probability rule kind {self.kind!r}")

    def evaluate(self, x: float) -> float:
        if self.kind == "constant":
            p = self.value
        elif self.kind == "step":
            p = self.high if x > self.threshold else self.low
        else:
            p = 1.0 / (1.0 + math.exp(-(self.intercept + self.slope * x)))
        return min(max(p, 0.0), 1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "low": self.low,
                "high": self.high, "threshold": self.threshold,
                "intercept": self.intercept, "slope": self.slope}

    @classmethod
    def from_dict(cls, d: dict) -> "ProbRule":
        return cls(**d)


@dataclass(frozen=True)
class SyntheticSpec:
    n_cases: int = 500
    arrival_rate: float = 0.2
    case_length_mean: float = 3.0
    n_features: int = 4
    outcome_base: ProbRule = field(
        default_factory=lambda: ProbRule(kind="logistic", intercept=1.5, slope=-3.0))
    effect: ProbRule = field(
        default_factory=lambda: ProbRule(kind="step", low=0.0, high=0.6))
    propensity: ProbRule = field(
        default_factory=lambda: ProbRule(kind="constant", value=0.5))
    neg_duration_mean: float = 30.0
    neg_duration_coef: float = -1.0
    pos_duration_range: tuple = (20.0, 60.0)

    def __post_init__(self):
        if self.n_cases < 1:
            raise ConfigError("n_cases must be >= 1")
        if self.arrival_rate <= 0:
            raise ConfigError("arrival_rate must be positive")
        if self.n_features < 1:
            raise ConfigError("n_features must be >= 1")
        lo, hi = self.pos_duration_range
        if not (0 < lo <= hi):
            raise ConfigError("pos_duration_range must be 0 < lo <= hi")
        if self.neg_duration_mean <= 0:
            raise ConfigError("neg_duration_mean must be positive")

    def to_dict(self) -> dict:
        return {
            "n_cases": self.n_cases,
            "arrival_rate": self.arrival_rate,
            "case_length_mean": self.case_length_mean,
            "n_features": self.n_features,
            "outcome_base": self.outcome_base.to_dict(),
            "effect": self.effect.to_dict(),
            "propensity": self.propensity.to_dict(),
            "neg_duration_mean": self.neg_duration_mean,
            "neg_duration_coef": self.neg_duration_coef,
            "pos_duration_range": list(self.pos_duration_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        kw = dict(d)
        for key in ("outcome_base", "effect", "propensity"):
            if key in kw:
                kw[key] = ProbRule.from_dict(kw[key])
        if "pos_duration_range" in kw:
            kw["pos_duration_range"] = tuple(kw["pos_duration_range"])
        return cls(**kw)


def synthetic_log_config() -> LogConfig:
    return LogConfig(
        positive_last_activities=frozenset({END_POSITIVE}),
        negative_last_activities=frozenset({END_NEGATIVE}),
        intervention_activity=TREATMENT_ACTIVITY,
        timestamp_format="unix",
    )


def gen_synthetic(spec: SyntheticSpec,
                  seed: int) -> tuple[EventLog, dict[str, PotentialOutcomes]]:
    """Generate a log and its ground-truth potential-outcome table."""
    rng = substream(seed, "synthetic")
    gaps = rng.exponential(1.0 / spec.arrival_rate, size=spec.n_cases)
    arrivals = np.cumsum(gaps)
    cases: list[Case] = []
    truth: dict[str, PotentialOutcomes] = {}
    width = max(5, len(str(spec.n_cases)))
    for i in range(spec.n_cases):
        case_id = f"S{i:0{width}d}"
        x = rng.uniform(0.0, 1.0, size=spec.n_features)
        channel = CHANNELS[int(rng.integers(0, len(CHANNELS)))]
        p0 = spec.outcome_base.evaluate(x[0])
        p1 = min(p0 + spec.effect.evaluate(x[0]), 1.0)
        u = rng.uniform()
        y0 = POSITIVE if u < p0 else NEGATIVE
        y1 = POSITIVE if u < p1 else NEGATIVE
        arm = int(rng.uniform() < spec.propensity.evaluate(x[0]))
        realized = y1 if arm == 1 else y0
        truth[case_id] = PotentialOutcomes(y0=y0, y1=y1, realized_arm=arm)

        t0 = float(arrivals[i])
        if realized == POSITIVE:
            lo, hi = spec.pos_duration_range
            duration = float(rng.uniform(lo, hi))
        else:
            mean = spec.neg_duration_mean * math.exp(spec.neg_duration_coef * x[0])
            duration = float(rng.exponential(mean))
        duration = max(duration, 1e-6)

        n_mid = int(rng.poisson(spec.case_length_mean))
        mid_times = np.sort(rng.uniform(t0, t0 + duration, size=n_mid))
        mid_acts = [MID_ACTIVITIES[int(j)]
                    for j in rng.integers(0, len(MID_ACTIVITIES), size=n_mid)]
        stream = [(t0, START_ACTIVITY)]
        stream.extend(zip(mid_times.tolist(), mid_acts))
        if arm == 1:
            stream.append((float(rng.uniform(t0, t0 + duration)), TREATMENT_ACTIVITY))
        end_act = END_POSITIVE if realized == POSITIVE else END_NEGATIVE
        stream.append((t0 + duration, end_act))
        stream.sort(key=lambda e: (e[0], e[1]))

        case_attrs = {f"x{j}": float(x[j]) for j in range(spec.n_features)}
        case_attrs["channel"] = channel
        events = tuple(
            Event(case_id=case_id, activity=act, timestamp=float(t),
                  resource=RESOURCES[int(rng.integers(0, len(RESOURCES)))],
                  attrs=dict(case_attrs))
            for t, act in stream)
        cases.append(Case(case_id=case_id, events=events, case_attrs=case_attrs,
                          outcome=realized, treated=arm == 1,
                          treat_count=1 if arm == 1 else 0))
    n_events = sum(len(c.events) for c in cases)
    cleaning = CleaningReport(input_rows=n_events, cases_kept=len(cases))
    return EventLog(cases=_canonical_order(cases), cleaning=cleaning), truth


def bundled_spec() -> SyntheticSpec:
    """The environment used by the acceptance checks: a signal half
    (x0 > 0.5) that almost always ends negatively untreated and almost
    always flips when treated, and a null half that ends positively on its
    own and gains nothing from treatment."""
    return SyntheticSpec(
        n_cases=8000,
        arrival_rate=0.2,
        case_length_mean=3.0,
        n_features=4,
        outcome_base=ProbRule(kind="step", low=0.97, high=0.015),
        effect=ProbRule(kind="step", low=0.0, high=0.955),
        propensity=ProbRule(kind="step", low=0.5, high=0.6),
        neg_duration_mean=30.0,
        neg_duration_coef=-1.0,
        pos_duration_range=(20.0, 60.0),
    )


def small_spec() -> SyntheticSpec:
    """A quick variant of the bundled environment for smoke runs."""
    return SyntheticSpec(
        n_cases=600,
        arrival_rate=0.2,
        case_length_mean=3.0,
        n_features=4,
        outcome_base=ProbRule(kind="step", low=0.97, high=0.015),
        effect=ProbRule(kind="step", low=0.0, high=0.955),
        propensity=ProbRule(kind="step", low=0.5, high=0.6),
        neg_duration_mean=30.0,
        neg_duration_coef=-1.0,
        pos_duration_range=(20.0, 60.0),
    )


PRESETS = {"bundled": bundled_spec, "small": small_spec}
