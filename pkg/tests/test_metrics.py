"""Confusion matrices, per-class metrics, rounding, and report rendering."""

import json
import logging

import numpy as np
import pytest

from octclass.errors import IndexOutOfRange, LengthMismatch, UnknownFormat
from octclass.labels import CLASS_NAMES
from octclass.metrics import (
    ConfusionMatrix,
    confusion_matrix,
    make_report,
    per_class_metrics,
    render_comparison,
    render_report,
    report_from_json,
    round2,
)


# independent oracle: metrics from a confusion matrix, scalar arithmetic only
def metrics_oracle(counts):
    n = len(counts)
    out = []
    for c in range(n):
        tp = counts[c][c]
        pred_c = sum(counts[r][c] for r in range(n))
        true_c = sum(counts[c])
        precision = tp / pred_c if pred_c else 0.0
        recall = tp / true_c if true_c else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out.append((precision, recall, f1))
    return out


def labels_for_counts(counts):
    """Expand a confusion matrix into (true, predicted) index lists."""
    true, pred = [], []
    for t, row in enumerate(counts):
        for p, k in enumerate(row):
            true.extend([t] * k)
            pred.extend([p] * k)
    return true, pred


class TestConfusionMatrix:
    def test_counts(self):
        cm = confusion_matrix([0, 0, 1, 1, 1], [0, 1, 1, 1, 0], num_classes=2)
        assert cm.counts.tolist() == [[1, 1], [1, 2]]
        assert cm.total == 5

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion_matrix([0, 1], [0], num_classes=2)

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            confusion_matrix([0, 5], [0, 1], num_classes=2)
        with pytest.raises(IndexOutOfRange):
            confusion_matrix([0, -1], [0, 1], num_classes=2)


class TestPerClassMetrics:
    def test_two_class_hand_oracle(self):
        cm = ConfusionMatrix(np.array([[8, 2], [1, 9]]))
        m = per_class_metrics(cm, ("a", "b"))
        assert abs(m[0].precision - 8 / 9) < 1e-12
        assert abs(m[0].recall - 0.8) < 1e-12
        expected_f1 = 2 * (8 / 9) * 0.8 / (8 / 9 + 0.8)
        assert abs(m[0].f1 - expected_f1) < 1e-12
        assert m[0].support == 10

    def test_zero_denominator_is_zero(self, caplog):
        # class 1 never predicted and never true
        cm = ConfusionMatrix(np.array([[5, 0], [0, 0]]))
        with caplog.at_level(logging.WARNING, logger="octclass.metrics"):
            m = per_class_metrics(cm, ("a", "b"))
        assert m[1].precision == 0.0
        assert m[1].recall == 0.0
        assert m[1].f1 == 0.0
        assert any("never predicted" in r.getMessage() for r in caplog.records)

    def test_matches_oracle_on_random_matrices(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            counts = rng.integers(0, 30, size=(4, 4))
            m = per_class_metrics(ConfusionMatrix(counts), ("a", "b", "c", "d"))
            for got, (p, r, f1) in zip(m, metrics_oracle(counts.tolist())):
                assert abs(got.precision - p) < 1e-12
                assert abs(got.recall - r) < 1e-12
                assert abs(got.f1 - f1) < 1e-12

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(3)
        counts = rng.integers(0, 20, size=(5, 5))
        perm = rng.permutation(5)
        base = per_class_metrics(ConfusionMatrix(counts),
                                 tuple("abcde"))
        permuted = per_class_metrics(
            ConfusionMatrix(counts[np.ix_(perm, perm)]),
            tuple("abcde"[i] for i in perm))
        for new_pos, old_pos in enumerate(perm):
            assert permuted[new_pos].precision == base[old_pos].precision
            assert permuted[new_pos].recall == base[old_pos].recall
            assert permuted[new_pos].f1 == base[old_pos].f1


class TestRounding:
    def test_half_up(self):
        assert str(round2(0.845)) == "0.85"
        assert str(round2(0.854999)) == "0.85"
        assert str(round2(0.855)) == "0.86"
        assert str(round2(0.8449)) == "0.84"

    def test_drusen_row(self):
        # 88 hits, 12 wrong predictions into the class, 18 misses
        precision = 88 / (88 + 12)
        recall = 88 / (88 + 18)
        f1 = 2 * precision * recall / (precision + recall)
        assert str(round2(precision)) == "0.88"
        assert str(round2(recall)) == "0.83"
        assert str(round2(f1)) == "0.85"


class TestReports:
    def perfect_report(self):
        true = list(range(8)) * 3
        return make_report(true, true, "demo")

    def test_perfect_is_all_ones(self):
        report = self.perfect_report()
        text = render_report(report, "text")
        assert text.count("1.00") == 24  # 8 classes x 3 metrics
        assert "100.00%" in text

    def test_markdown_table(self):
        md = render_report(self.perfect_report(), "markdown")
        assert md.splitlines()[2].startswith("|")
        assert "| AMD |" in md.replace("  ", " ")

    def test_json_round_trip(self):
        true = [0, 0, 1, 1, 2, 2, 3, 4, 5, 6, 7, 7]
        pred = [0, 1, 1, 1, 2, 0, 3, 4, 5, 6, 7, 2]
        report = make_report(true, pred, "demo")
        clone = report_from_json(render_report(report, "json"))
        assert clone.model_name == report.model_name
        assert clone.overall_accuracy == report.overall_accuracy
        assert np.array_equal(clone.confusion.counts, report.confusion.counts)
        for a, b in zip(clone.metrics, report.metrics):
            assert (a.name, a.precision, a.recall, a.f1, a.support) == (
                b.name, b.precision, b.recall, b.f1, b.support)

    def test_json_schema_fields(self):
        doc = json.loads(render_report(self.perfect_report(), "json"))
        assert set(doc) == {"model", "overall_accuracy", "classes", "confusion"}
        assert [c["name"] for c in doc["classes"]] == list(CLASS_NAMES)
        assert set(doc["classes"][0]) == {"name", "precision", "recall", "f1",
                                          "support"}

    def test_unknown_format(self):
        with pytest.raises(UnknownFormat):
            render_report(self.perfect_report(), "xml")


class TestComparison:
    def reports(self):
        # accuracies 0.9525 and 0.9482 via 10,000 predictions
        a_true = [0] * 10000
        a_pred = [0] * 9525 + [1] * 475
        b_pred = [0] * 9482 + [1] * 518
        return [
            make_report(a_true, a_pred, "alpha_net"),
            make_report(a_true, b_pred, "beta_net"),
        ]

    def test_live_rows_sorted_descending(self):
        table = render_comparison(self.reports(), include_prior=False)
        assert "95.25%" in table
        assert "94.82%" in table
        assert table.index("95.25%") < table.index("94.82%")

    def test_prior_rows_present(self):
        table = render_comparison(self.reports(), include_prior=True)
        for fragment in ("Verma", "84.00%", "Rithani", "92.76%", "Vasanthi",
                         "90.00%", "Eren", "91.47%", "Wali", "80.00%"):
            assert fragment in table

    def test_markdown_format(self):
        table = render_comparison(self.reports(), format="markdown")
        assert table.startswith("| Author | Method | Accuracy |")

    def test_unknown_format(self):
        with pytest.raises(UnknownFormat):
            render_comparison(self.reports(), format="csv")
