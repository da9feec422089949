"""Event-log parsing, cleaning, outcome labeling, prefix extraction and splits.

A log is a set of cases; a case is a time-ordered sequence of events plus
case-level attributes, a binary outcome derived from its terminal activity,
and a historical treatment flag derived from the presence of the configured
intervention activity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ConfigError, EmptyLogError, SplitError, UnlabeledCaseError

POSITIVE = 1
NEGATIVE = 0

_DEFAULT_COLUMNS = {
    "case_id": "case_id",
    "activity": "activity",
    "timestamp": "timestamp",
    "resource": "resource",
}


@dataclass(frozen=True)
class LogConfig:
    """Log-specific interpretation rules.

    Args:
        positive_last_activities: terminal activities labeling a case positive.
        negative_last_activities: terminal activities labeling a case negative.
        intervention_activity: activity whose presence marks a case as
            historically treated.
        timestamp_format: ``None`` for ISO-8601 auto-parsing, ``"unix"`` for
            numeric seconds, otherwise a ``strptime`` format string.
        column_map: logical name -> CSV column name. ``resource`` may be
            omitted from the file.
        delta_attrs: numeric event attributes encoded as last-minus-first
            change over a prefix (log-specific extras).
    """

    positive_last_activities: frozenset[str]
    negative_last_activities: frozenset[str]
    intervention_activity: str
    timestamp_format: str | None = None
    column_map: dict[str, str] = field(default_factory=lambda: dict(_DEFAULT_COLUMNS))
    delta_attrs: tuple[str, ...] = ()

    def __post_init__(self):
        pos = frozenset(self.positive_last_activities)
        neg = frozenset(self.negative_last_activities)
        object.__setattr__(self, "positive_last_activities", pos)
        object.__setattr__(self, "negative_last_activities", neg)
        object.__setattr__(self, "delta_attrs", tuple(self.delta_attrs))
        if not pos or not neg:
            raise ConfigError("both outcome activity sets must be non-empty")
        if pos & neg:
            raise ConfigError(f"outcome activity sets overlap: {sorted(pos & neg)}")
        if not self.intervention_activity:
            raise ConfigError("intervention_activity must be non-empty")
        for key in ("case_id", "activity", "timestamp"):
            if key not in self.column_map:
                raise ConfigError(f"column_map is missing required key {key!r}")

    def to_dict(self) -> dict:
        return {
            "positive_last_activities": sorted(self.positive_last_activities),
            "negative_last_activities": sorted(self.negative_last_activities),
            "intervention_activity": self.intervention_activity,
            "timestamp_format": self.timestamp_format,
            "column_map": dict(self.column_map),
            "delta_attrs": list(self.delta_attrs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogConfig":
        try:
            return cls(
                positive_last_activities=frozenset(d["positive_last_activities"]),
                negative_last_activities=frozenset(d["negative_last_activities"]),
                intervention_activity=d["intervention_activity"],
                timestamp_format=d.get("timestamp_format"),
                column_map=dict(d.get("column_map", _DEFAULT_COLUMNS)),
                delta_attrs=tuple(d.get("delta_attrs", ())),
            )
        except KeyError as exc:
            raise ConfigError(f"log config is missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class Event:
    case_id: str
    activity: str
    timestamp: float
    resource: str | None = None
    attrs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Case:
    case_id: str
    events: tuple[Event, ...]
    case_attrs: dict
    outcome: int
    treated: bool
    treat_count: int

    @property
    def arrival_time(self) -> float:
        return self.events[0].timestamp

    @property
    def end_time(self) -> float:
        return self.events[-1].timestamp

    @property
    def length(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class CasePrefix:
    """The first ``k`` events of a case, the unit of decision-making."""

    case_id: str
    k: int
    events: tuple[Event, ...]
    case_attrs: dict

    @property
    def prefix_end_time(self) -> float:
        return self.events[-1].timestamp

    @property
    def start_time(self) -> float:
        return self.events[0].timestamp


@dataclass(frozen=True)
class CleaningReport:
    input_rows: int = 0
    events_dropped_bad_timestamp: int = 0
    cases_dropped_empty: int = 0
    cases_dropped_unlabeled: int = 0
    cases_kept: int = 0

    def to_dict(self) -> dict:
        return {
            "input_rows": self.input_rows,
            "events_dropped_bad_timestamp": self.events_dropped_bad_timestamp,
            "cases_dropped_empty": self.cases_dropped_empty,
            "cases_dropped_unlabeled": self.cases_dropped_unlabeled,
            "cases_kept": self.cases_kept,
        }


@dataclass(frozen=True)
class EventLog:
    """Cleaned cases in canonical order (arrival time, then case id)."""

    cases: tuple[Case, ...]
    cleaning: CleaningReport = field(default_factory=CleaningReport)

    def __len__(self) -> int:
        return len(self.cases)

    def __iter__(self):
        return iter(self.cases)

    def case_by_id(self, case_id: str) -> Case:
        for c in self.cases:
            if c.case_id == case_id:
                return c
        raise KeyError(case_id)

    @property
    def n_events(self) -> int:
        return sum(c.length for c in self.cases)

    def duration(self) -> float:
        """Span from the first arrival to the last case end."""
        if not self.cases:
            return 0.0
        start = min(c.arrival_time for c in self.cases)
        end = max(c.end_time for c in self.cases)
        return end - start

    def mean_case_duration(self) -> float:
        if not self.cases:
            return 0.0
        return float(np.mean([c.end_time - c.arrival_time for c in self.cases]))

    def length_percentile(self, q: float) -> int:
        if not self.cases:
            return 1
        lengths = np.array([c.length for c in self.cases], dtype=float)
        return max(1, int(math.ceil(float(np.percentile(lengths, q)))))


def _canonical_order(cases: list[Case]) -> tuple[Case, ...]:
    return tuple(sorted(cases, key=lambda c: (c.arrival_time, c.case_id)))


def label_outcome(case_events: tuple[Event, ...] | Case, cfg: LogConfig) -> int:
    """Label a case by its terminal activity.

    Raises:
        UnlabeledCaseError: if the last activity is in neither outcome set.
    """
    events = case_events.events if isinstance(case_events, Case) else case_events
    last = events[-1].activity
    if last in cfg.negative_last_activities:
        return NEGATIVE
    if last in cfg.positive_last_activities:
        return POSITIVE
    raise UnlabeledCaseError(
        f"terminal activity {last!r} matches neither outcome set"
    )


def _timestamps_to_seconds(col: pd.Series, fmt: str | None) -> pd.Series:
    """Return float seconds since epoch; unparseable entries become NaN."""
    if fmt == "unix":
        return pd.to_numeric(col, errors="coerce").astype(float)
    kwargs = {"errors": "coerce", "utc": True}
    if fmt is not None:
        kwargs["format"] = fmt
    parsed = pd.to_datetime(col, **kwargs)
    out = pd.Series(np.nan, index=col.index, dtype=float)
    mask = parsed.notna()
    if mask.any():
        out[mask] = parsed[mask].astype("int64").to_numpy() / 1e9
    return out


def parse_log(path: str | Path, cfg: LogConfig) -> EventLog:
    """Parse and clean a CSV event log.

    Cleaning removes events with unparseable timestamps, then cases left
    empty, then cases whose terminal activity matches neither outcome set.
    All removals are counted in the returned log's ``cleaning`` report.

    Args:
        path: CSV file with one row per event.
        cfg: log interpretation rules.

    Returns:
        An :class:`EventLog` in canonical case order.

    Raises:
        ConfigError: missing file or missing required columns.
        EmptyLogError: the file had event rows but no case survived cleaning.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"log file does not exist: {path}")
    df = pd.read_csv(path, dtype=str, keep_default_na=True)
    n_rows = len(df)
    for key in ("case_id", "activity", "timestamp"):
        col = cfg.column_map[key]
        if col not in df.columns:
            raise ConfigError(f"log file {path} lacks required column {col!r}")
    res_col = cfg.column_map.get("resource")
    has_resource = res_col is not None and res_col in df.columns

    if n_rows == 0:
        return EventLog(cases=(), cleaning=CleaningReport(input_rows=0))

    ts = _timestamps_to_seconds(df[cfg.column_map["timestamp"]], cfg.timestamp_format)
    bad_ts = int(ts.isna().sum())
    df = df.assign(_ts=ts)
    df = df[df["_ts"].notna()]

    core_cols = {cfg.column_map["case_id"], cfg.column_map["activity"],
                 cfg.column_map["timestamp"]}
    if has_resource:
        core_cols.add(res_col)
    attr_cols = [c for c in df.columns if c not in core_cols and c != "_ts"]

    # Auto-typing: a column is numeric when every non-missing value parses.
    numeric_attrs: dict[str, pd.Series] = {}
    for c in attr_cols:
        vals = df[c]
        nums = pd.to_numeric(vals, errors="coerce")
        if vals.notna().any() and (nums.notna() == vals.notna()).all():
            numeric_attrs[c] = nums

    case_col = cfg.column_map["case_id"]
    act_col = cfg.column_map["activity"]

    # A column is a case attribute iff constant within every case.
    case_attr_cols: list[str] = []
    if attr_cols:
        nunique = df.groupby(case_col, sort=False)[attr_cols].nunique(dropna=True)
        for c in attr_cols:
            if (nunique[c] <= 1).all():
                case_attr_cols.append(c)
    event_attr_cols = [c for c in attr_cols if c not in case_attr_cols]

    cases: list[Case] = []
    dropped_empty = 0
    dropped_unlabeled = 0
    grouped = df.groupby(case_col, sort=False)
    for case_id, g in grouped:
        g = g.sort_values("_ts", kind="stable")
        if len(g) == 0:
            dropped_empty += 1
            continue
        events = []
        for row in g.itertuples(index=False):
            rowd = dict(zip(g.columns, row))
            attrs = {}
            for c in event_attr_cols:
                v = rowd[c]
                if isinstance(v, float) and math.isnan(v):
                    continue
                if v is None or (isinstance(v, str) and v == ""):
                    continue
                if c in numeric_attrs:
                    attrs[c] = float(v)
                else:
                    attrs[c] = str(v)
            resource = None
            if has_resource:
                rv = rowd[res_col]
                if rv is not None and not (isinstance(rv, float) and math.isnan(rv)):
                    resource = str(rv)
            events.append(Event(
                case_id=str(case_id),
                activity=str(rowd[act_col]),
                timestamp=float(rowd["_ts"]),
                resource=resource,
                attrs=attrs,
            ))
        case_attrs = {}
        for c in case_attr_cols:
            nonnull = g[c].dropna()
            if len(nonnull) == 0:
                continue
            v = nonnull.iloc[0]
            case_attrs[c] = float(v) if c in numeric_attrs else str(v)
        events_t = tuple(events)
        try:
            outcome = label_outcome(events_t, cfg)
        except UnlabeledCaseError:
            dropped_unlabeled += 1
            continue
        n_treat = sum(1 for e in events_t if e.activity == cfg.intervention_activity)
        cases.append(Case(
            case_id=str(case_id),
            events=events_t,
            case_attrs=case_attrs,
            outcome=outcome,
            treated=n_treat > 0,
            treat_count=n_treat,
        ))

    # Count case ids wiped out entirely by timestamp cleaning.
    all_ids = set(pd.read_csv(path, dtype=str, usecols=[case_col])[case_col].astype(str))
    surviving_ids = {str(cid) for cid, _ in grouped}
    dropped_empty += len(all_ids - surviving_ids)

    report = CleaningReport(
        input_rows=n_rows,
        events_dropped_bad_timestamp=bad_ts,
        cases_dropped_empty=dropped_empty,
        cases_dropped_unlabeled=dropped_unlabeled,
        cases_kept=len(cases),
    )
    if n_rows > 0 and not cases:
        raise EmptyLogError(
            f"no case in {path} survived cleaning "
            f"(bad timestamps: {bad_ts}, unlabeled: {dropped_unlabeled})"
        )
    return EventLog(cases=_canonical_order(cases), cleaning=report)


def extract_prefixes(case: Case, max_prefix: int | None = None) -> list[CasePrefix]:
    """All prefixes of a case, capped at ``max_prefix`` events."""
    if max_prefix is not None and max_prefix < 1:
        raise ConfigError(f"max_prefix must be >= 1, got {max_prefix}")
    top = case.length if max_prefix is None else min(case.length, max_prefix)
    return [
        CasePrefix(
            case_id=case.case_id,
            k=k,
            events=case.events[:k],
            case_attrs=case.case_attrs,
        )
        for k in range(1, top + 1)
    ]


def iter_prefixes(log: EventLog, max_prefix: int | None = None):
    """Yield ``(case, prefix)`` pairs over a log in canonical order."""
    for case in log:
        for p in extract_prefixes(case, max_prefix):
            yield case, p


def split_log(log: EventLog, ratios: tuple[float, float, float]) -> tuple[EventLog, EventLog, EventLog]:
    """Temporal train/calibration/test split by case arrival time.

    Sizes use floor rounding with the remainder assigned to train; each case
    falls wholly into one split; earlier cases go to earlier splits.

    Raises:
        SplitError: non-positive ratios, ratios not summing to 1, or any
            split receiving zero cases.
    """
    if len(ratios) != 3:
        raise SplitError(f"expected 3 ratios, got {len(ratios)}")
    if any(r <= 0 for r in ratios):
        raise SplitError(f"split ratios must be positive: {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"split ratios must sum to 1: {ratios}")
    n = len(log)
    n_calib = int(math.floor(n * ratios[1]))
    n_test = int(math.floor(n * ratios[2]))
    n_train = n - n_calib - n_test
    if min(n_train, n_calib, n_test) <= 0:
        raise SplitError(
            f"split of {n} cases at {ratios} leaves an empty split "
            f"(train={n_train}, calib={n_calib}, test={n_test})"
        )
    ordered = log.cases  # already canonical
    parts = (
        ordered[:n_train],
        ordered[n_train:n_train + n_calib],
        ordered[n_train + n_calib:],
    )
    return tuple(EventLog(cases=p) for p in parts)


def write_log(log: EventLog, path: str | Path) -> None:
    """Write a log to CSV in canonical form (unix timestamps, sorted attrs).

    The output is byte-deterministic for a given log.
    """
    path = Path(path)
    attr_names = sorted({k for c in log for e in c.events for k in e.attrs})
    case_attr_names = sorted({k for c in log for k in c.case_attrs})
    has_resource = any(e.resource is not None for c in log for e in c.events)
    cols = ["case_id", "activity", "timestamp"]
    if has_resource:
        cols.append("resource")
    cols += attr_names + case_attr_names
    lines = [",".join(cols)]
    for case in log:
        for e in case.events:
            row = [e.case_id, e.activity, repr(e.timestamp)]
            if has_resource:
                row.append("" if e.resource is None else e.resource)
            for a in attr_names:
                v = e.attrs.get(a)
                row.append("" if v is None else (repr(v) if isinstance(v, float) else str(v)))
            for a in case_attr_names:
                v = case.case_attrs.get(a)
                row.append("" if v is None else (repr(v) if isinstance(v, float) else str(v)))
            lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
