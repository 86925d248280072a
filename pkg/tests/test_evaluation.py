"""Tests for splitting, metrics, and evaluation reports."""

import fractions

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secretsweep.evaluation import (
    ConfusionCounts,
    EvalResult,
    MetricsError,
    SplitError,
    compute_metrics,
    display_rounded,
    evaluate_pipeline,
    metrics_from_predictions,
    read_predictions,
    stratified_split,
    write_predictions,
)


class TestConfusionCounts:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            ConfusionCounts(tp=-1, fp=0, tn=0, fn=0)

    def test_total(self):
        assert ConfusionCounts(tp=1, fp=2, tn=3, fn=4).total == 10


class TestComputeMetrics:
    def test_all_flagged_baseline(self):
        # 261 true secrets against 759 non-secrets, everything flagged.
        report = compute_metrics(ConfusionCounts(tp=261, fp=759, tn=0, fn=0))
        assert report.precision == pytest.approx(261 / 1020)
        assert round(report.precision, 4) == 0.2559
        assert display_rounded(report.precision) == "0.26"
        assert report.recall == 1.0
        assert report.f1 == pytest.approx(522 / 1281)
        assert round(report.f1, 4) == 0.4075
        assert display_rounded(report.f1) == "0.41"
        assert not report.degenerate_flags

    def test_filtered_confusion_arithmetic(self):
        # 258 of 261 secrets kept, 383 of 759 non-secrets suppressed.
        report = compute_metrics(ConfusionCounts(tp=258, fp=376,
                                                 tn=383, fn=3))
        assert report.precision == pytest.approx(258 / 634)
        assert round(report.precision, 4) == 0.4069
        assert display_rounded(report.precision) == "0.41"
        assert report.recall == pytest.approx(258 / 261)
        assert round(report.recall, 4) == 0.9885
        assert display_rounded(report.recall) == "0.99"
        # F1 = 2tp / (2tp + fp + fn) = 516/895
        exact = fractions.Fraction(516, 895)
        assert report.f1 == pytest.approx(float(exact), abs=1e-15)
        assert round(report.f1, 4) == 0.5765
        assert display_rounded(report.f1) == "0.58"

    def test_degenerate_no_predictions(self):
        report = compute_metrics(ConfusionCounts(tp=0, fp=0, tn=0, fn=5))
        assert report.precision == 0.0
        assert report.recall == 0.0
        assert report.f1 == 0.0
        assert "no_predicted_positives" in report.degenerate_flags
        assert "f1_undefined" in report.degenerate_flags
        assert "no_actual_positives" not in report.degenerate_flags

    def test_degenerate_no_actual_positives(self):
        report = compute_metrics(ConfusionCounts(tp=0, fp=2, tn=3, fn=0))
        assert "no_actual_positives" in report.degenerate_flags
        assert report.recall == 0.0

    def test_all_zero_rejected(self):
        with pytest.raises(MetricsError):
            compute_metrics(ConfusionCounts(tp=0, fp=0, tn=0, fn=0))

    @given(tp=st.integers(0, 50), fp=st.integers(0, 50),
           tn=st.integers(0, 50), fn=st.integers(0, 50),
           k=st.integers(1, 9))
    @settings(max_examples=60, deadline=None)
    def test_scale_free(self, tp, fp, tn, fn, k):
        counts = ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)
        if counts.total == 0:
            return
        base = compute_metrics(counts)
        scaled = compute_metrics(counts.scaled(k))
        assert scaled.precision == pytest.approx(base.precision)
        assert scaled.recall == pytest.approx(base.recall)
        assert scaled.f1 == pytest.approx(base.f1)
        assert scaled.degenerate_flags == base.degenerate_flags


class TestDisplayRounding:
    def test_half_up(self):
        assert display_rounded(0.405) == "0.41"
        assert display_rounded(0.125) == "0.13"
        assert display_rounded(0.404999) == "0.40"
        assert display_rounded(1.0) == "1.00"
        assert display_rounded(0.0) == "0.00"


class TestStratifiedSplit:
    def test_floor_arithmetic_single_class(self):
        examples = [(f"item{i}", "x") for i in range(10)]
        train, val, test = stratified_split(examples, seed=3)
        assert (len(train), len(val), len(test)) == (7, 1, 2)

    def test_large_corpus_composition(self):
        examples = ([(f"pos{i}", 1) for i in range(2_584)]
                    + [(f"neg{i}", 0) for i in range(7_622)])
        train, val, test = stratified_split(examples, seed=11)
        test_pos = sum(1 for _, label in test if label == 1)
        assert abs(test_pos - 0.2 * 2_584) <= 1
        assert test_pos == 517
        assert len(train) + len(val) + len(test) == 10_206

    def test_same_seed_identical(self):
        examples = [(i, i % 3) for i in range(50)]
        first = stratified_split(examples, seed=7)
        second = stratified_split(examples, seed=7)
        assert first == second

    def test_different_seed_differs(self):
        examples = [(i, 0) for i in range(100)]
        a, _, _ = stratified_split(examples, seed=1)
        b, _, _ = stratified_split(examples, seed=2)
        assert a != b

    @given(seed=st.integers(0, 1_000), n=st.integers(1, 80))
    @settings(max_examples=50, deadline=None)
    def test_partition(self, seed, n):
        examples = [(i, i % 4) for i in range(n)]
        train, val, test = stratified_split(examples, seed=seed)
        combined = sorted(train + val + test)
        assert combined == sorted(examples)

    def test_empty_rejected(self):
        with pytest.raises(SplitError):
            stratified_split([])

    def test_bad_ratios_rejected(self):
        examples = [(1, 0)]
        with pytest.raises(SplitError):
            stratified_split(examples, ratios=(0.5, 0.5, 0.5))
        with pytest.raises(SplitError):
            stratified_split(examples, ratios=(0.9, -0.1, 0.2))


class TestEvaluatePipeline:
    def items(self):
        return [
            ("a", 0.9, "secret"),
            ("b", 0.8, "secret"),
            ("c", 0.3, "not_secret"),
            ("d", 0.7, "not_secret"),
        ]

    def test_flag_everything_matches_heuristic(self):
        result = evaluate_pipeline(lambda _: 1.0, self.items(), 0.5)
        assert result.model == result.heuristic

    def test_scores_threshold_against_gold(self):
        result = evaluate_pipeline(lambda s: s, self.items(), 0.75)
        assert result.model.counts == ConfusionCounts(tp=2, fp=0, tn=2, fn=0)
        assert result.heuristic.counts == ConfusionCounts(tp=2, fp=2,
                                                          tn=0, fn=0)
        by_id = {p["id"]: p for p in result.predictions}
        assert by_id["a"]["predicted"] is True
        assert by_id["c"]["predicted"] is False
        assert by_id["c"]["gold"] == "not_secret"

    def test_unlabeled_items_listed(self):
        items = self.items() + [("z", 0.5, "unlabeled")]
        with pytest.raises(MetricsError, match="z"):
            evaluate_pipeline(lambda s: s, items, 0.5)

    def test_empty_rejected(self):
        with pytest.raises(MetricsError):
            evaluate_pipeline(lambda s: s, [], 0.5)

    def test_comparison_table_shape(self):
        result = evaluate_pipeline(lambda s: s, self.items(), 0.75)
        table = result.comparison_table()
        lines = table.splitlines()
        assert len(lines) == 3
        assert "precision" in lines[0]
        assert lines[1].startswith("heuristic")
        assert lines[2].startswith("model")
        assert "1.00" in lines[2]

    def test_jsonl_round_trip_reproduces_summary(self, tmp_path):
        result = evaluate_pipeline(lambda s: s, self.items(), 0.75)
        path = tmp_path / "preds.jsonl"
        write_predictions(path, result.predictions)
        records = read_predictions(path)
        recomputed = metrics_from_predictions(records)
        assert recomputed == result.model

    def test_result_to_dict_rounds(self):
        result = evaluate_pipeline(lambda s: s, self.items(), 0.75)
        payload = result.to_dict()
        assert set(payload) == {"model", "heuristic"}
        assert payload["heuristic"]["recall"] == 1.0
