"""Prefix feature encoding: case attributes, aggregate event statistics,
temporal features, and inter-case (workload) features.

The schema is fitted on the training split only and applied unchanged to
calibration, test, and replay-time prefixes, so encoding is leak-free by
construction. Unseen categorical values map to each vocabulary's ``other``
slot; numeric case attributes missing at encode time fall back to their
training mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import ConfigError, DataError
from .eventlog import Case, CasePrefix, EventLog

OTHER = "__other__"

TEMPORAL_NAMES = (
    "time_to_last_event",
    "time_since_case_start",
    "time_since_last_event",
    "time_since_midnight",
    "month",
    "weekday",
    "hour",
)

# Built-in categorical event attributes taken from core event fields.
_CORE_EVENT_CATS = ("activity", "resource")


@dataclass(frozen=True)
class FeatureSpec:
    """One feature column.

    kind is one of: case_num, case_cat, count, mean, delta, temporal,
    intercase. ``attr``/``value`` qualify the kind; ``default`` is the
    fallback for case_num (training mean) and mean (0.0).
    """

    name: str
    kind: str
    attr: str | None = None
    value: str | None = None
    default: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "attr": self.attr,
                "value": self.value, "default": self.default}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        return cls(name=d["name"], kind=d["kind"], attr=d.get("attr"),
                   value=d.get("value"), default=float(d.get("default", 0.0)))


@dataclass(frozen=True)
class FeatureSchema:
    specs: tuple[FeatureSpec, ...]
    intercase_window: float

    def __len__(self) -> int:
        return len(self.specs)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    def index_of(self, name: str) -> int:
        for i, s in enumerate(self.specs):
            if s.name == name:
                return i
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "format": "presmon:feature-schema",
            "version": 1,
            "intercase_window": self.intercase_window,
            "specs": [s.to_dict() for s in self.specs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        if d.get("format") != "presmon:feature-schema":
            raise ConfigError("not a feature schema document")
        return cls(
            specs=tuple(FeatureSpec.from_dict(s) for s in d["specs"]),
            intercase_window=float(d["intercase_window"]),
        )


@dataclass(frozen=True)
class InterCaseContext:
    wip: int
    arrival_rate: float


class InterCaseIndex:
    """Time-sorted arrival/end index for workload queries over one log.

    Built once per log; queries are O(log n). The log's own arrivals and
    ends are fixed by the data, so the index is immutable during replay.
    """

    def __init__(self, log: EventLog):
        self._arrivals = np.sort(np.array([c.arrival_time for c in log], dtype=float))
        self._ends = np.sort(np.array([c.end_time for c in log], dtype=float))

    def wip(self, t: float) -> int:
        """Cases with arrival_time <= t < end_time. A case counts at its own
        arrival instant and stops counting at its end instant."""
        started = int(np.searchsorted(self._arrivals, t, side="right"))
        ended = int(np.searchsorted(self._ends, t, side="right"))
        return started - ended

    def arrival_rate(self, t: float, window: float) -> float:
        """Arrivals in (t - window, t] divided by the window length."""
        if window <= 0:
            raise ConfigError(f"arrival-rate window must be positive, got {window}")
        hi = int(np.searchsorted(self._arrivals, t, side="right"))
        lo = int(np.searchsorted(self._arrivals, t - window, side="right"))
        return (hi - lo) / window

    def context(self, t: float, window: float) -> InterCaseContext:
        return InterCaseContext(wip=self.wip(t), arrival_rate=self.arrival_rate(t, window))


def intercase_context(log: EventLog | InterCaseIndex, t: float, window: float) -> InterCaseContext:
    index = log if isinstance(log, InterCaseIndex) else InterCaseIndex(log)
    return index.context(t, window)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def fit_schema(train: EventLog, delta_attrs: tuple[str, ...] = (),
               window: float | None = None) -> FeatureSchema:
    """Fit the feature schema on the training split.

    Vocabularies for categorical attributes, training means for numeric case
    attributes, and the arrival-rate window (defaulting to the training
    split's mean case duration) are all derived here and frozen.
    """
    if len(train) == 0:
        raise DataError("cannot fit a feature schema on an empty log")

    specs: list[FeatureSpec] = []

    # Case attributes: numeric -> one column with training-mean default;
    # categorical -> one-hot over the training vocabulary plus "other".
    case_attr_vals: dict[str, list] = {}
    for c in train:
        for k, v in c.case_attrs.items():
            case_attr_vals.setdefault(k, []).append(v)
    for attr in sorted(case_attr_vals):
        vals = case_attr_vals[attr]
        if all(_is_number(v) for v in vals):
            mean = float(np.mean([float(v) for v in vals]))
            specs.append(FeatureSpec(name=f"case:{attr}", kind="case_num",
                                     attr=attr, default=mean))
        else:
            for val in sorted({str(v) for v in vals}):
                specs.append(FeatureSpec(name=f"case:{attr}={val}", kind="case_cat",
                                         attr=attr, value=val))
            specs.append(FeatureSpec(name=f"case:{attr}={OTHER}", kind="case_cat",
                                     attr=attr, value=OTHER))

    # Event attributes: categorical -> per-value occurrence counts plus
    # "other"; numeric -> mean over the prefix (0 when absent).
    cat_vocab: dict[str, set] = {}
    num_attrs: set[str] = set()
    attr_seen: dict[str, list] = {}
    any_resource = False
    for c in train:
        for e in c.events:
            cat_vocab.setdefault("activity", set()).add(e.activity)
            if e.resource is not None:
                any_resource = True
                cat_vocab.setdefault("resource", set()).add(e.resource)
            for k, v in e.attrs.items():
                attr_seen.setdefault(k, []).append(v)
    for attr in sorted(attr_seen):
        vals = attr_seen[attr]
        if all(_is_number(v) for v in vals):
            num_attrs.add(attr)
        else:
            cat_vocab[attr] = {str(v) for v in vals}
    if not any_resource:
        cat_vocab.pop("resource", None)

    for attr in sorted(cat_vocab):
        for val in sorted(cat_vocab[attr]):
            specs.append(FeatureSpec(name=f"count:{attr}={val}", kind="count",
                                     attr=attr, value=val))
        specs.append(FeatureSpec(name=f"count:{attr}={OTHER}", kind="count",
                                 attr=attr, value=OTHER))
    for attr in sorted(num_attrs):
        specs.append(FeatureSpec(name=f"mean:{attr}", kind="mean", attr=attr))

    for attr in delta_attrs:
        if attr not in num_attrs:
            raise ConfigError(
                f"delta feature requested for {attr!r}, which is not a numeric "
                f"event attribute of the training log"
            )
        specs.append(FeatureSpec(name=f"delta:{attr}", kind="delta", attr=attr))

    for name in TEMPORAL_NAMES:
        specs.append(FeatureSpec(name=f"temporal:{name}", kind="temporal", attr=name))

    specs.append(FeatureSpec(name="intercase:wip", kind="intercase", attr="wip"))
    specs.append(FeatureSpec(name="intercase:arrival_rate", kind="intercase",
                             attr="arrival_rate"))

    if window is None:
        window = train.mean_case_duration()
        if window <= 0:
            window = 1.0
    return FeatureSchema(specs=tuple(specs), intercase_window=float(window))


def _event_cat_value(event, attr: str) -> str | None:
    if attr == "activity":
        return event.activity
    if attr == "resource":
        return event.resource
    v = event.attrs.get(attr)
    return None if v is None else str(v)


def _temporal(prefix: CasePrefix, which: str, decision_time: float | None) -> float:
    end = prefix.prefix_end_time
    if which == "time_to_last_event":
        # Wall-clock lag between the prefix's last event and the decision
        # instant; zero offline and at replay decision points, which fire
        # at the event itself.
        return max(decision_time - end, 0.0) if decision_time is not None else 0.0
    if which == "time_since_case_start":
        return end - prefix.start_time
    if which == "time_since_last_event":
        if prefix.k < 2:
            return 0.0
        return prefix.events[-1].timestamp - prefix.events[-2].timestamp
    if which == "time_since_midnight":
        return float(end % 86400.0)
    dt = datetime.fromtimestamp(end, tz=timezone.utc)
    if which == "month":
        return float(dt.month)
    if which == "weekday":
        return float(dt.weekday())
    if which == "hour":
        return float(dt.hour)
    raise ConfigError(f"unknown temporal feature {which!r}")


def encode(prefix: CasePrefix, schema: FeatureSchema, ctx: InterCaseContext,
           decision_time: float | None = None) -> np.ndarray:
    """Encode one prefix into the schema's fixed-length float vector.

    Pure function of its inputs. Missing numeric case attributes fall back
    to the training mean; unseen or missing categorical case attributes hit
    the "other" slot; unseen categorical event values count toward "other"
    while events missing the attribute entirely are not counted.
    """
    out = np.zeros(len(schema.specs), dtype=float)
    counted: dict[str, dict[str, int]] = {}

    for i, spec in enumerate(schema.specs):
        kind = spec.kind
        if kind == "case_num":
            v = prefix.case_attrs.get(spec.attr)
            out[i] = float(v) if _is_number(v) else spec.default
        elif kind == "case_cat":
            v = prefix.case_attrs.get(spec.attr)
            observed = None if v is None else str(v)
            known = _case_cat_values(schema, spec.attr)
            if spec.value == OTHER:
                out[i] = 1.0 if (observed is None or observed not in known) else 0.0
            else:
                out[i] = 1.0 if observed == spec.value else 0.0
        elif kind == "count":
            if spec.attr not in counted:
                vocab = {s.value for s in schema.specs
                         if s.kind == "count" and s.attr == spec.attr and s.value != OTHER}
                tally: dict[str, int] = {}
                for e in prefix.events:
                    val = _event_cat_value(e, spec.attr)
                    if val is None:
                        continue
                    key = val if val in vocab else OTHER
                    tally[key] = tally.get(key, 0) + 1
                counted[spec.attr] = tally
            out[i] = float(counted[spec.attr].get(spec.value, 0))
        elif kind == "mean":
            vals = [float(e.attrs[spec.attr]) for e in prefix.events
                    if _is_number(e.attrs.get(spec.attr))]
            out[i] = float(np.mean(vals)) if vals else spec.default
        elif kind == "delta":
            vals = [float(e.attrs[spec.attr]) for e in prefix.events
                    if _is_number(e.attrs.get(spec.attr))]
            out[i] = (vals[-1] - vals[0]) if len(vals) >= 1 else 0.0
        elif kind == "temporal":
            out[i] = _temporal(prefix, spec.attr, decision_time)
        elif kind == "intercase":
            out[i] = float(ctx.wip) if spec.attr == "wip" else float(ctx.arrival_rate)
        else:
            raise ConfigError(f"unknown feature kind {kind!r}")

    if not np.all(np.isfinite(out)):
        bad = [schema.specs[j].name for j in np.where(~np.isfinite(out))[0]]
        raise DataError(f"non-finite feature values for {prefix.case_id}: {bad}")
    return out


def _case_cat_values(schema: FeatureSchema, attr: str) -> set[str]:
    return {s.value for s in schema.specs
            if s.kind == "case_cat" and s.attr == attr and s.value != OTHER}


def encode_prefixes(prefixes, schema: FeatureSchema, index: InterCaseIndex) -> np.ndarray:
    """Encode a sequence of prefixes against one log's workload index."""
    rows = []
    for p in prefixes:
        ctx = index.context(p.prefix_end_time, schema.intercase_window)
        rows.append(encode(p, schema, ctx))
    if not rows:
        return np.zeros((0, len(schema.specs)))
    return np.stack(rows)
