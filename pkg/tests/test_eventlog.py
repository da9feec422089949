from __future__ import annotations

import pytest

from presmon.errors import ConfigError, EmptyLogError, SplitError, UnlabeledCaseError
from presmon.eventlog import (
    NEGATIVE,
    POSITIVE,
    EventLog,
    LogConfig,
    extract_prefixes,
    label_outcome,
    parse_log,
    split_log,
    write_log,
)

from conftest import make_case


def write_csv(path, rows, header="case_id,activity,timestamp,resource"):
    path.write_text("\n".join([header] + rows) + "\n")


@pytest.fixture
def unix_cfg():
    return LogConfig(
        positive_last_activities=frozenset({"Payment"}),
        negative_last_activities=frozenset({"Send for Credit Collection"}),
        intervention_activity="Add penalty",
        timestamp_format="unix",
    )


class TestParse:
    def test_empty_csv_with_valid_header_gives_zero_cases(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        write_csv(p, [])
        log = parse_log(p, unix_cfg)
        assert len(log) == 0
        assert log.cleaning.input_rows == 0

    def test_events_sorted_and_outcomes_labeled(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        write_csv(p, [
            "a,Payment,5.0,r1",
            "a,Create Fine,1.0,r1",
            "b,Create Fine,2.0,r2",
            "b,Send for Credit Collection,9.0,r2",
        ])
        log = parse_log(p, unix_cfg)
        assert len(log) == 2
        a = log.case_by_id("a")
        assert [e.activity for e in a.events] == ["Create Fine", "Payment"]
        assert a.outcome == POSITIVE
        assert log.case_by_id("b").outcome == NEGATIVE

    def test_unparseable_timestamp_drops_event_and_counts(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        write_csv(p, [
            "a,Create Fine,1.0,r1",
            "a,Add penalty,notatime,r1",
            "a,Payment,5.0,r1",
        ])
        log = parse_log(p, unix_cfg)
        assert log.cleaning.events_dropped_bad_timestamp == 1
        assert log.case_by_id("a").length == 2
        assert not log.case_by_id("a").treated

    def test_case_with_all_bad_timestamps_dropped_and_counted(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        write_csv(p, [
            "a,Create Fine,1.0,r1",
            "a,Payment,5.0,r1",
            "b,Create Fine,bogus,r1",
        ])
        log = parse_log(p, unix_cfg)
        assert len(log) == 1
        assert log.cleaning.cases_dropped_empty == 1

    def test_unlabeled_case_dropped_and_counted(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        write_csv(p, [
            "a,Create Fine,1.0,r1",
            "a,Payment,5.0,r1",
            "b,Create Fine,2.0,r1",
            "b,Appeal,3.0,r1",
        ])
        log = parse_log(p, unix_cfg)
        assert len(log) == 1
        assert log.cleaning.cases_dropped_unlabeled == 1

    def test_all_cases_removed_is_an_error(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        write_csv(p, ["a,Create Fine,1.0,r1", "a,Appeal,2.0,r1"])
        with pytest.raises(EmptyLogError):
            parse_log(p, unix_cfg)

    def test_missing_required_column_is_config_error(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        p.write_text("case_id,timestamp\na,1.0\n")
        with pytest.raises(ConfigError):
            parse_log(p, unix_cfg)

    def test_missing_file_is_config_error_naming_path(self, tmp_path, unix_cfg):
        missing = tmp_path / "nope.csv"
        with pytest.raises(ConfigError, match="nope.csv"):
            parse_log(missing, unix_cfg)

    def test_treated_flag_and_count(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        write_csv(p, [
            "a,Create Fine,1.0,r1",
            "a,Add penalty,2.0,r1",
            "a,Add penalty,3.0,r1",
            "a,Send for Credit Collection,9.0,r1",
        ])
        case = parse_log(p, unix_cfg).case_by_id("a")
        assert case.treated and case.treat_count == 2

    def test_case_attrs_autodetected_and_typed(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        write_csv(p, [
            "a,Create Fine,1.0,r1,35.0,web,3",
            "a,Payment,5.0,r1,35.0,web,7",
            "b,Create Fine,2.0,r2,80.5,branch,1",
            "b,Send for Credit Collection,6.0,r2,80.5,branch,",
        ], header="case_id,activity,timestamp,resource,amount,channel,effort")
        log = parse_log(p, unix_cfg)
        a = log.case_by_id("a")
        assert a.case_attrs == {"amount": 35.0, "channel": "web"}
        # effort varies within a case -> event attribute, numeric
        assert a.events[0].attrs["effort"] == 3.0
        # missing value -> attribute absent from that event
        b = log.case_by_id("b")
        assert "effort" not in b.events[-1].attrs

    def test_resource_column_optional(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        p.write_text("case_id,activity,timestamp\na,Create Fine,1.0\na,Payment,2.0\n")
        log = parse_log(p, unix_cfg)
        assert log.case_by_id("a").events[0].resource is None

    def test_iso_timestamps_parse(self, tmp_path):
        cfg = LogConfig(
            positive_last_activities=frozenset({"A_pending"}),
            negative_last_activities=frozenset({"A_Canceled", "A_Declnied"}),
            intervention_activity="Creat_Offer",
        )
        p = tmp_path / "log.csv"
        write_csv(p, [
            "a,A_SUBMITTED,2012-01-01T00:00:00,r1",
            "a,Creat_Offer,2012-01-01T01:00:00,r1",
            "a,A_pending,2012-01-02T00:00:00,r1",
        ])
        log = parse_log(p, cfg)
        case = log.case_by_id("a")
        assert case.outcome == POSITIVE and case.treated
        assert case.end_time - case.arrival_time == pytest.approx(86400.0)

    def test_reparse_is_byte_identical(self, tmp_path, unix_cfg):
        p = tmp_path / "log.csv"
        write_csv(p, [
            "a,Create Fine,1.25,r1",
            "a,Payment,5.5,r1",
            "b,Create Fine,2.0,r2",
            "b,Send for Credit Collection,6.0,r2",
        ])
        out1, out2 = tmp_path / "o1.csv", tmp_path / "o2.csv"
        write_log(parse_log(p, unix_cfg), out1)
        write_log(parse_log(p, unix_cfg), out2)
        assert out1.read_bytes() == out2.read_bytes()
        # canonical form round-trips through the parser
        again = parse_log(out1, unix_cfg)
        assert again.cases == parse_log(p, unix_cfg).cases


class TestLabelOutcome:
    def test_traffic_fines_examples(self, unix_cfg):
        pos = make_case("x", ["Create Fine", "Payment"], cfg=unix_cfg)
        neg = make_case("y", ["Create Fine", "Send for Credit Collection"], cfg=unix_cfg)
        assert label_outcome(pos, unix_cfg) == POSITIVE
        assert label_outcome(neg, unix_cfg) == NEGATIVE

    def test_unrecognized_terminal_activity_raises(self, unix_cfg):
        odd = make_case("z", ["Create Fine", "Appeal"], outcome=NEGATIVE)
        with pytest.raises(UnlabeledCaseError):
            label_outcome(odd, unix_cfg)

    def test_overlapping_outcome_sets_rejected(self):
        with pytest.raises(ConfigError):
            LogConfig(
                positive_last_activities=frozenset({"X"}),
                negative_last_activities=frozenset({"X", "Y"}),
                intervention_activity="T",
            )


class TestPrefixes:
    def test_five_events_gives_five_prefixes(self, basic_cfg):
        case = make_case("c", ["a", "b", "c", "d", "end_pos"], cfg=basic_cfg)
        prefixes = extract_prefixes(case)
        assert [p.k for p in prefixes] == [1, 2, 3, 4, 5]
        assert prefixes[2].events == case.events[:3]

    def test_cap_truncates(self, basic_cfg):
        case = make_case("c", ["a"] * 39 + ["end_pos"], cfg=basic_cfg)
        assert len(extract_prefixes(case, max_prefix=25)) == 25

    def test_single_event_case(self, basic_cfg):
        case = make_case("c", ["end_pos"], cfg=basic_cfg)
        prefixes = extract_prefixes(case)
        assert len(prefixes) == 1 and prefixes[0].k == 1

    def test_prefix_end_times_nondecreasing(self, tiny_log):
        for case in tiny_log:
            ends = [p.prefix_end_time for p in extract_prefixes(case)]
            assert ends == sorted(ends)


class TestSplit:
    def _mklog(self, n, cfg):
        cases = [make_case(f"c{i:04d}", ["s", "end_pos"], t0=float(i), cfg=cfg)
                 for i in range(n)]
        return EventLog(cases=tuple(cases))

    def test_100_cases_standard_ratios(self, basic_cfg):
        log = self._mklog(100, basic_cfg)
        tr, ca, te = split_log(log, (0.5, 0.25, 0.25))
        assert (len(tr), len(ca), len(te)) == (50, 25, 25)

    def test_4_cases_remainder_to_train(self, basic_cfg):
        log = self._mklog(4, basic_cfg)
        tr, ca, te = split_log(log, (0.5, 0.25, 0.25))
        assert (len(tr), len(ca), len(te)) == (2, 1, 1)

    def test_zero_ratio_rejected(self, basic_cfg):
        log = self._mklog(10, basic_cfg)
        with pytest.raises(SplitError):
            split_log(log, (0.5, 0.5, 0.0))

    def test_temporal_order_and_partition(self, basic_cfg):
        log = self._mklog(40, basic_cfg)
        tr, ca, te = split_log(log, (0.5, 0.25, 0.25))
        assert max(c.arrival_time for c in tr) < min(c.arrival_time for c in ca)
        assert max(c.arrival_time for c in ca) < min(c.arrival_time for c in te)
        ids = [c.case_id for part in (tr, ca, te) for c in part]
        assert sorted(ids) == sorted(c.case_id for c in log)
        assert len(set(ids)) == len(ids)

    def test_too_few_cases_for_split(self, basic_cfg):
        log = self._mklog(2, basic_cfg)
        with pytest.raises(SplitError):
            split_log(log, (0.5, 0.25, 0.25))
