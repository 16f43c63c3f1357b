import json
import math
import os
from pathlib import Path

import pandas as pd
import pytest
from scipy.stats import norm

from src.errors import DataError, UsageError
from src.projects import (
    RATES_BY_THRESHOLD_COLUMNS,
    SUCCESS_RATE_COLUMNS,
    analysis_frame,
    analyze_records,
    combined_pvalue_table,
    discordant_pairs,
    filter_projects,
    ingest_csv,
    ingest_text,
    replication_rate_by_threshold,
    success_rates,
    summary_statistics,
    to_study_pair,
    write_report,
)
from src.pydantic_models import Method, StudyRecord

LEVEL = 0.025**2


@pytest.fixture
def pvalue_rows(pvalues_csv):
    return analyze_records(ingest_csv(pvalues_csv).records)


class TestIngestion:
    def test_correlation_form(self, correlations_csv):
        report = ingest_csv(correlations_csv)
        assert report.source_name == "correlations.csv"
        assert report.total_rows == 5
        assert len(report.records) == 5
        assert report.rejected == []
        assert [r.study for r in report.records][:2] == ["rpp-01", "rpp-02"]

    def test_bypass_form_is_taken_verbatim(self, pvalues_csv):
        record = ingest_csv(pvalues_csv).records[0]
        assert (record.po, record.pr, record.c) == (0.027, 0.006, None)
        pair = to_study_pair(record)
        assert (pair.po, pair.pr) == (0.027, 0.006)

    def test_bad_rows_are_reported_with_line_numbers(self, bad_rows_csv):
        report = ingest_csv(bad_rows_csv)
        assert len(report.records) == 1
        assert [r.line for r in report.rejected] == [3, 4, 5]
        assert "ro" in report.rejected[0].message
        assert "no" in report.rejected[1].message
        assert "rr" in report.rejected[2].message

    def test_strict_mode_raises(self, bad_rows_csv):
        with pytest.raises(DataError) as info:
            ingest_csv(bad_rows_csv, strict=True)
        assert [line for line, _ in info.value.rows] == [3, 4, 5]

    def test_blank_lines_keep_physical_line_numbers(self):
        text = "project,study,ro,no,rr,nr\nRPP,a,0.5,50,0.4,100\n\nRPP,b,abc,50,0.4,100\n\n\nRPP,c,0.5,3,0.4,100\n\n"
        report = ingest_text(text, source_name="gaps")
        assert report.total_rows == 3
        assert [r.study for r in report.records] == ["a"]
        assert [r.line for r in report.rejected] == [4, 7]

    def test_undecodable_bytes_are_a_data_error(self, bad_encoding_csv):
        with pytest.raises(DataError, match="not UTF-8"):
            ingest_csv(bad_encoding_csv)

    def test_header_errors(self, tmp_path):
        with pytest.raises(UsageError):
            ingest_text("a,b,c\n1,2,3\n", source_name="wrong")
        with pytest.raises(UsageError):
            ingest_text("project,study,po,pr\n", source_name="header-only")
        with pytest.raises(UsageError):
            ingest_text("   ", source_name="blank")
        with pytest.raises(UsageError):
            ingest_csv(tmp_path / "missing.csv")
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(UsageError):
            ingest_csv(empty)

    def test_incomplete_record(self):
        report = ingest_text("project,study,po,pr\nA,x,0.01,\n", source_name="t")
        assert report.records == []
        assert report.rejected[0].line == 2


class TestStudyPairs:
    def test_fisher_z_transformation(self):
        rec = StudyRecord(project="RPP", study="s", ro=0.5, no=50, rr=0.4, nr=100)
        pair = to_study_pair(rec)
        assert pair.po == pytest.approx(norm.sf(math.atanh(0.5) * math.sqrt(47)), rel=1e-10)
        assert pair.pr == pytest.approx(norm.sf(math.atanh(0.4) * math.sqrt(97)), rel=1e-10)
        assert pair.c == pytest.approx(97 / 47)

    def test_orientation_follows_original_sign(self):
        pair = to_study_pair(StudyRecord(project="RPP", study="s", ro=-0.4, no=60, rr=-0.35, nr=120))
        assert pair.po < 0.01
        assert pair.pr < 0.01

        flipped = to_study_pair(StudyRecord(project="RPP", study="s", ro=-0.4, no=60, rr=0.35, nr=120))
        assert flipped.pr > 0.99

    def test_zero_original_correlation(self):
        pair = to_study_pair(StudyRecord(project="EERP", study="s", ro=0.0, no=30, rr=0.1, nr=30))
        assert pair.po == 0.5
        assert pair.c == 1.0

    def test_extreme_correlation_is_floored_not_zero(self):
        pair = to_study_pair(StudyRecord(project="RPP", study="s", ro=0.99, no=2000, rr=0.5, nr=50))
        assert 0.0 < pair.po < 1e-100


class TestTables:
    def test_analysis_rows(self, pvalue_rows):
        discordant, both, neither, strong, wrong = pvalue_rows
        assert discordant.results[Method.EDGINGTON].success
        assert not discordant.results[Method.TWO_TRIALS].success
        assert Method.META_ANALYSIS not in discordant.results
        assert all(r.success for r in both.results.values())
        assert not any(r.success for r in neither.results.values())
        assert wrong.wrong_direction
        assert wrong.results[Method.FISHER].success

    def test_success_rates(self, pvalue_rows):
        frame = success_rates(pvalue_rows, [LEVEL])
        assert list(frame.columns) == SUCCESS_RATE_COLUMNS
        rates = {(row.project, row.method): (row.successes, row.n) for row in frame.itertuples()}
        assert rates[("EERP", "two-trials")] == (1, 3)
        assert rates[("EERP", "edgington")] == (2, 3)
        assert rates[("EERP", "edgington-weighted")] == (2, 3)
        assert rates[("EERP", "fisher")] == (1, 3)
        assert rates[("EERP", "meta")] == (1, 1)
        assert rates[("SSRP", "fisher")] == (2, 2)
        assert frame.loc[0, "rate_percent"] == 33.3

    def test_rates_grow_with_level(self, pvalue_rows):
        frame = success_rates(pvalue_rows, [1e-6, LEVEL, 0.01])
        for _, group in frame.groupby(["project", "method"]):
            assert group["rate"].is_monotonic_increasing

    def test_replication_rate_by_threshold(self, pvalue_rows):
        frame = replication_rate_by_threshold(pvalue_rows, thresholds=[0.001, 0.05])
        assert list(frame.columns) == RATES_BY_THRESHOLD_COLUMNS
        first = frame.iloc[0]
        assert (first.n_below, first.n_above) == (3, 2)
        assert first.rate_below == pytest.approx(2 / 3)
        assert first.rate_above == pytest.approx(0.5)
        assert math.isnan(frame.iloc[1].rate_above)

    def test_no_significant_replications(self):
        text = "project,study,po,pr\nX,a,0.00001,0.5\nX,b,0.001,0.5\nX,c,0.02,0.5\n"
        rows = analyze_records(ingest_text(text, source_name="t").records)
        frame = replication_rate_by_threshold(rows, thresholds=[1e-4, 0.01])
        assert (frame["rate_below"] == 0).all()
        assert (frame["rate_above"] == 0).all()

    def test_combined_pvalue_table_and_discordance(self, pvalue_rows):
        nonsignificant = combined_pvalue_table(pvalue_rows)
        assert [row.study for row in nonsignificant] == ["neither", "wrong-direction"]
        assert [row.study for row in discordant_pairs(pvalue_rows)] == ["discordant"]

    def test_summary_statistics(self, pvalue_rows):
        summary = summary_statistics(pvalue_rows)
        assert summary["n_pairs"] == 5
        assert summary["pairs_per_project"] == {"EERP": 3, "SSRP": 2}
        assert summary["n_po_below_1e-6"] == 0
        assert summary["n_nonsignificant_replications"] == 2
        assert summary["min_edgington_p_nonsignificant"] == pytest.approx(0.34**2 / 2)
        assert summary["n_discordant_edgington_two_trials"] == 1
        assert summary["fisher_successes_wrong_direction"] == 1
        assert summary["meta_successes_wrong_direction"] == 0

    def test_analysis_frame_columns(self, pvalue_rows):
        frame = analysis_frame(pvalue_rows)
        assert "p_edgington_weighted" in frame.columns
        assert "success_meta" in frame.columns
        assert frame["wrong_direction"].sum() == 1

    def test_filter_projects(self, pvalues_csv):
        records = ingest_csv(pvalues_csv).records
        assert {r.project for r in filter_projects(records, ["SSRP"])} == {"SSRP"}
        assert filter_projects(records, None) == records
        with pytest.raises(UsageError):
            filter_projects(records, ["NOPE"])


def test_write_report_is_deterministic(pvalue_rows, tmp_path):
    first = write_report(pvalue_rows, tmp_path / "a")
    second = write_report(pvalue_rows, tmp_path / "b")
    assert [p.name for p in first] == [
        "rates_by_threshold.csv",
        "rates_by_threshold.json",
        "success_rates.csv",
        "success_rates.json",
        "combined_pvalues.csv",
        "combined_pvalues.json",
    ]
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()

    rates = json.loads((tmp_path / "a" / "rates_by_threshold.json").read_text())
    assert rates[-1]["rate_above"] is None
    csv = pd.read_csv(tmp_path / "a" / "success_rates.csv")
    assert len(csv) == len(success_rates(pvalue_rows))


PROJECTS_CSV = os.getenv("REPLISUM_PROJECTS_CSV")


@pytest.mark.skipif(not PROJECTS_CSV, reason="REPLISUM_PROJECTS_CSV not set")
class TestReplicationProjectsDataset:
    @pytest.fixture(scope="class")
    def rows(self):
        return analyze_records(ingest_csv(Path(PROJECTS_CSV), strict=True).records)

    @pytest.mark.parametrize(
        "project, two_trials, edgington",
        [("RPP", 30.4, 31.9), ("EERP", 55.6, 61.1), ("SSRP", 61.9, 61.9), ("EPRP", 76.7, 76.7)],
    )
    def test_success_rates(self, rows, project, two_trials, edgington):
        frame = success_rates(rows, [LEVEL], [Method.TWO_TRIALS, Method.EDGINGTON])
        rates = frame[frame["project"] == project].set_index("method")["rate_percent"]
        assert rates["two-trials"] == two_trials
        assert rates["edgington"] == edgington

    def test_smallest_nonsignificant_edgington_p(self, rows):
        summary = summary_statistics(rows)
        assert round(summary["min_edgington_p_nonsignificant"], 6) == 0.000635


def test_lower_bounds_of_combined_pvalues(pvalue_rows):
    for row in pvalue_rows:
        assert row.results[Method.TWO_TRIALS].p_combined >= row.pr**2
        if row.po + row.pr <= 1:
            assert row.results[Method.EDGINGTON].p_combined >= row.pr**2 / 2


def test_flipping_both_signs_keeps_the_pair():
    positive = to_study_pair(StudyRecord(project="RPP", study="s", ro=0.3, no=40, rr=0.2, nr=90))
    negative = to_study_pair(StudyRecord(project="RPP", study="s", ro=-0.3, no=40, rr=-0.2, nr=90))
    assert (positive.po, positive.pr, positive.c) == pytest.approx((negative.po, negative.pr, negative.c), rel=1e-12)


def test_bypass_form_reproduces_correlation_form(correlations_csv):
    records = ingest_csv(correlations_csv).records
    pairs = [to_study_pair(rec) for rec in records]
    bypass = [
        StudyRecord(project=rec.project, study=rec.study, po=pair.po, pr=pair.pr, c=pair.c)
        for rec, pair in zip(records, pairs)
    ]
    from_correlations = analyze_records(records)
    from_pvalues = analyze_records(bypass)
    for a, b in zip(from_correlations, from_pvalues):
        for method, result in a.results.items():
            assert b.results[method].p_combined == pytest.approx(result.p_combined, rel=1e-10, abs=1e-300)
