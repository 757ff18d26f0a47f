"""Confusion matrix, per-class precision/recall/F1, and report rendering.

Definitions (per class k, counts[t, p] with rows = true class):
    TP_k = counts[k, k]
    FP_k = column sum minus TP
    FN_k = row sum minus TP
    recall    = TP / (TP + FN)
    precision = TP / (TP + FP)
    F1        = 2 P R / (P + R)
Zero denominators evaluate to 0 by convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import LabelError, ShapeError
from .training import predict_probs


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (K, K) integers, rows = true class, cols = predicted

    def __post_init__(self):
        c = self.counts
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ShapeError("confusion matrix must be square")
        if (c < 0).any():
            raise ShapeError("confusion counts must be non-negative")

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_csv(self, path: str):
        np.savetxt(path, self.counts, fmt="%d", delimiter=",")


def confusion(true_labels, predicted_labels, k: int) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise LabelError("true and predicted label vectors differ in length")
    if len(t) and (min(t.min(), p.min()) < 0 or max(t.max(), p.max()) >= k):
        raise LabelError(f"label outside [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class ClassReport:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    class_names: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "classes": [
                {
                    "index": i,
                    "name": self.class_names[i] if self.class_names else str(i),
                    "precision": float(self.precision[i]),
                    "recall": float(self.recall[i]),
                    "f1": float(self.f1[i]),
                    "support": int(self.support[i]),
                }
                for i in range(len(self.precision))
            ],
            "accuracy": self.accuracy,
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
        }

    def save_json(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)


def _safe_div(num, den):
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(den, dtype=np.float64)
    nz = den > 0
    out[nz] = np.asarray(num, dtype=np.float64)[nz] / den[nz]
    return out


def class_metrics(cm: ConfusionMatrix, class_names: tuple[str, ...] = ()) -> ClassReport:
    counts = cm.counts
    tp = np.diag(counts).astype(np.float64)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    precision = _safe_div(tp, predicted)
    recall = _safe_div(tp, support)
    f1 = _safe_div(2.0 * precision * recall, precision + recall)
    total = counts.sum()
    accuracy = float(tp.sum() / total) if total else 0.0
    w = support / total if total else np.zeros_like(support, dtype=np.float64)
    return ClassReport(
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        accuracy=accuracy,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float((precision * w).sum()),
        weighted_recall=float((recall * w).sum()),
        weighted_f1=float((f1 * w).sum()),
        class_names=tuple(class_names),
    )


def render_report(report: ClassReport) -> str:
    """Class-wise table rounded to 2 decimals, with accuracy and averages."""
    lines = [f"{'idx':>3} {'class':<12} {'precision':>9} {'recall':>9} {'f1':>9} {'support':>8}"]
    for row in report.to_dict()["classes"]:
        lines.append(
            f"{row['index']:>3} {row['name']:<12} {row['precision']:>9.2f} "
            f"{row['recall']:>9.2f} {row['f1']:>9.2f} {row['support']:>8d}"
        )
    lines.append("")
    lines.append(f"{'accuracy':<16} {report.accuracy:>29.2f}")
    lines.append(
        f"{'macro avg':<16} {report.macro_precision:>9.2f} "
        f"{report.macro_recall:>9.2f} {report.macro_f1:>9.2f}"
    )
    lines.append(
        f"{'weighted avg':<16} {report.weighted_precision:>9.2f} "
        f"{report.weighted_recall:>9.2f} {report.weighted_f1:>9.2f}"
    )
    return "\n".join(lines)


def evaluate_model(model, ds: Dataset) -> tuple[ClassReport, ConfusionMatrix]:
    """Eval-mode forward over the whole dataset; argmax with lowest-index
    tie-break (numpy argmax semantics)."""
    k = model.spec.num_classes
    if k != len(ds.class_names):
        raise ShapeError(
            f"model head has {k} classes but dataset declares {len(ds.class_names)}"
        )
    probs = predict_probs(model, ds.images)
    predicted = probs.argmax(axis=1)
    cm = confusion(ds.labels, predicted, k)
    return class_metrics(cm, ds.class_names), cm
