"""Confusion matrices, per-class precision/recall/F1, report rendering,
and the cross-model comparison table."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources

import numpy as np

from .errors import IndexOutOfRange, LengthMismatch, UnknownFormat
from .labels import CLASS_NAMES

logger = logging.getLogger(__name__)


@dataclass
class ConfusionMatrix:
    """counts[t][p]: rows are true classes, columns are predicted classes."""

    counts: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvaluationReport:
    confusion: ConfusionMatrix
    metrics: list[ClassMetrics]
    overall_accuracy: float
    model_name: str


def confusion_matrix(
    true_labels, predicted, num_classes: int = len(CLASS_NAMES)
) -> ConfusionMatrix:
    true_arr = np.asarray(true_labels, dtype=np.int64)
    pred_arr = np.asarray(predicted, dtype=np.int64)
    if true_arr.shape != pred_arr.shape or true_arr.ndim != 1:
        raise LengthMismatch(
            f"label lists must be equal-length 1-D: {true_arr.shape} vs {pred_arr.shape}"
        )
    if true_arr.size and (
        true_arr.min() < 0 or true_arr.max() >= num_classes
        or pred_arr.min() < 0 or pred_arr.max() >= num_classes
    ):
        raise IndexOutOfRange(f"class indices must be in 0..{num_classes - 1}")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (true_arr, pred_arr), 1)
    return ConfusionMatrix(counts)


def per_class_metrics(
    cm: ConfusionMatrix, class_names: tuple[str, ...] | None = None
) -> list[ClassMetrics]:
    """Precision/recall/F1 per class; zero denominators yield 0, never NaN."""
    n = cm.num_classes
    names = class_names or (CLASS_NAMES if n == len(CLASS_NAMES)
                            else tuple(f"class_{i}" for i in range(n)))
    col_sums = cm.counts.sum(axis=0)
    row_sums = cm.counts.sum(axis=1)
    out = []
    for c in range(n):
        tp = int(cm.counts[c, c])
        if col_sums[c] == 0:
            logger.warning("class %s never predicted; precision set to 0", names[c])
            precision = 0.0
        else:
            precision = tp / int(col_sums[c])
        if row_sums[c] == 0:
            logger.warning("class %s has no true examples; recall set to 0", names[c])
            recall = 0.0
        else:
            recall = tp / int(row_sums[c])
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        out.append(ClassMetrics(names[c], precision, recall, f1, int(row_sums[c])))
    return out


def make_report(
    true_labels,
    predicted,
    model_name: str,
    num_classes: int = len(CLASS_NAMES),
    class_names: tuple[str, ...] | None = None,
) -> EvaluationReport:
    cm = confusion_matrix(true_labels, predicted, num_classes)
    metrics = per_class_metrics(cm, class_names)
    total = cm.total
    accuracy = float(np.trace(cm.counts)) / total if total else 0.0
    return EvaluationReport(cm, metrics, accuracy, model_name)


def round2(value: float) -> Decimal:
    """Half-up rounding to two decimals, matching report table precision."""
    return Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def format_percent(fraction: float) -> str:
    return f"{Decimal(str(fraction * 100)).quantize(Decimal('0.01'), rounding=ROUND_HALF_UP)}%"


def render_report(report: EvaluationReport, format: str = "text") -> str:
    if format == "json":
        doc = {
            "model": report.model_name,
            "overall_accuracy": report.overall_accuracy,
            "classes": [
                {"name": m.name, "precision": m.precision, "recall": m.recall,
                 "f1": m.f1, "support": m.support}
                for m in report.metrics
            ],
            "confusion": report.confusion.counts.tolist(),
        }
        return json.dumps(doc, indent=2)

    rows = [
        (m.name, str(round2(m.precision)), str(round2(m.recall)),
         str(round2(m.f1)), str(m.support))
        for m in report.metrics
    ]
    header = ("Class", "Precision", "Recall", "F1-Score", "Support")
    accuracy_line = f"Overall accuracy: {format_percent(report.overall_accuracy)}"

    if format == "markdown":
        lines = [f"### Classification report: {report.model_name}", ""]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join(["---"] * len(header)) + "|")
        for row in rows:
            lines.append("| " + " | ".join(row) + " |")
        lines += ["", accuracy_line]
        return "\n".join(lines)

    if format == "text":
        widths = [max(len(header[i]), *(len(r[i]) for r in rows))
                  for i in range(len(header))]
        lines = [f"Classification report: {report.model_name}"]
        lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)))
        for row in rows:
            lines.append("  ".join(v.ljust(widths[i]) for i, v in enumerate(row)))
        lines.append(accuracy_line)
        return "\n".join(lines)

    raise UnknownFormat(f"unknown report format: {format!r}")


def report_from_json(text: str) -> EvaluationReport:
    doc = json.loads(text)
    metrics = [
        ClassMetrics(c["name"], c["precision"], c["recall"], c["f1"], c["support"])
        for c in doc["classes"]
    ]
    return EvaluationReport(
        confusion=ConfusionMatrix(np.array(doc["confusion"], dtype=np.int64)),
        metrics=metrics,
        overall_accuracy=doc["overall_accuracy"],
        model_name=doc["model"],
    )


def prior_results() -> list[dict]:
    """Published accuracies from earlier OCT classification studies
    (display-only rows for the comparison table)."""
    text = resources.files("octclass").joinpath("prior_results.json").read_text()
    return json.loads(text)


def render_comparison(
    reports: list[EvaluationReport],
    include_prior: bool = True,
    format: str = "text",
) -> str:
    """Comparison table of prior-study rows plus live report accuracies."""
    rows: list[tuple[str, str, str]] = []
    if include_prior:
        for row in prior_results():
            pct = Decimal(str(row["accuracy_pct"])).quantize(
                Decimal("0.01"), rounding=ROUND_HALF_UP)
            rows.append((row["author"], row["method"], f"{pct}%"))
    for report in sorted(reports, key=lambda r: -r.overall_accuracy):
        rows.append(("this work", report.model_name,
                     format_percent(report.overall_accuracy)))

    header = ("Author", "Method", "Accuracy")
    if format == "markdown":
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "|".join(["---"] * 3) + "|"]
        for row in rows:
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines)
    if format == "text":
        widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(3)]
        lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
        for row in rows:
            lines.append("  ".join(v.ljust(widths[i]) for i, v in enumerate(row)))
        return "\n".join(lines)
    raise UnknownFormat(f"unknown comparison format: {format!r}")
