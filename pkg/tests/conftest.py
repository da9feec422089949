from __future__ import annotations

import pytest

from presmon.eventlog import NEGATIVE, POSITIVE, Case, Event, EventLog, LogConfig


def make_case(case_id, acts, t0=0.0, gap=1.0, attrs=None, event_attrs=None,
              resources=None, cfg=None, outcome=None):
    """Build a Case by hand; outcome inferred from the last activity when a
    config is given, otherwise it must be passed explicitly."""
    events = []
    for i, a in enumerate(acts):
        ea = {} if event_attrs is None else dict(event_attrs[i])
        res = None if resources is None else resources[i]
        events.append(Event(case_id=case_id, activity=a, timestamp=t0 + i * gap,
                            resource=res, attrs=ea))
    if outcome is None:
        if cfg is None:
            raise ValueError("need cfg or outcome")
        last = acts[-1]
        outcome = NEGATIVE if last in cfg.negative_last_activities else POSITIVE
    treat = cfg.intervention_activity if cfg else "treat"
    n_treat = sum(1 for a in acts if a == treat)
    return Case(case_id=case_id, events=tuple(events), case_attrs=dict(attrs or {}),
                outcome=outcome, treated=n_treat > 0, treat_count=n_treat)


@pytest.fixture
def basic_cfg():
    return LogConfig(
        positive_last_activities=frozenset({"end_pos"}),
        negative_last_activities=frozenset({"end_neg"}),
        intervention_activity="treat",
        timestamp_format="unix",
    )


@pytest.fixture
def tiny_log(basic_cfg):
    cases = [
        make_case("c1", ["start", "work", "end_pos"], t0=0.0, cfg=basic_cfg),
        make_case("c2", ["start", "treat", "end_neg"], t0=1.0, cfg=basic_cfg),
        make_case("c3", ["start", "end_neg"], t0=2.0, cfg=basic_cfg),
        make_case("c4", ["start", "work", "work", "end_pos"], t0=3.0, cfg=basic_cfg),
    ]
    return EventLog(cases=tuple(sorted(cases, key=lambda c: (c.arrival_time, c.case_id))))
