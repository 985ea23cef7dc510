"""Multi-label evaluation: per-label F1, F1-macro, F1-micro, accuracy.

Conventions (both documented, both configurable nowhere):

* an F1 with zero denominator (no true positives and no errors on that
  side) scores 0;
* "accuracy" is per-(sample, label) decision accuracy, i.e. correctly
  classified cells over all cells, not exact-match subset accuracy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .validation import as_binary_matrix
from .exceptions import ContractViolationError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    @property
    def n_labels(self) -> int:
        return self.tp.shape[0]

    @property
    def total(self) -> np.ndarray:
        return self.tp + self.fp + self.fn + self.tn


def confusion(preds, labels) -> ConfusionCounts:
    """Per-label confusion counts for binary matrices of equal shape."""
    p = as_binary_matrix(preds, "preds")
    y = as_binary_matrix(labels, "labels")
    if p.shape != y.shape:
        raise ContractViolationError(
            f"confusion: shape mismatch {p.shape} vs {y.shape}"
        )
    tp = np.sum((p == 1) & (y == 1), axis=0).astype(np.int64)
    fp = np.sum((p == 1) & (y == 0), axis=0).astype(np.int64)
    fn = np.sum((p == 0) & (y == 1), axis=0).astype(np.int64)
    tn = np.sum((p == 0) & (y == 0), axis=0).astype(np.int64)
    return ConfusionCounts(tp, fp, fn, tn)


def f1_per_label(c: ConfusionCounts) -> np.ndarray:
    denom = 2 * c.tp + c.fp + c.fn
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = np.where(denom > 0, 2.0 * c.tp / np.maximum(denom, 1), 0.0)
    return f1


def f1_macro(c: ConfusionCounts) -> float:
    return float(np.mean(f1_per_label(c)))


def f1_micro(c: ConfusionCounts) -> float:
    tp, fp, fn = int(c.tp.sum()), int(c.fp.sum()), int(c.fn.sum())
    denom = 2 * tp + fp + fn
    return float(2.0 * tp / denom) if denom > 0 else 0.0


def accuracy(c: ConfusionCounts) -> float:
    total = int(c.total.sum())
    return float((c.tp.sum() + c.tn.sum()) / total) if total > 0 else 0.0


def accuracy_per_label(c: ConfusionCounts) -> np.ndarray:
    total = c.total
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, (c.tp + c.tn) / np.maximum(total, 1), 0.0)


@dataclass(frozen=True)
class MetricsReport:
    per_label_f1: tuple
    per_label_accuracy: tuple
    f1_macro: float
    f1_micro: float
    accuracy: float

    @staticmethod
    def from_counts(c: ConfusionCounts) -> "MetricsReport":
        return MetricsReport(
            per_label_f1=tuple(float(x) for x in f1_per_label(c)),
            per_label_accuracy=tuple(float(x) for x in accuracy_per_label(c)),
            f1_macro=f1_macro(c),
            f1_micro=f1_micro(c),
            accuracy=accuracy(c),
        )

    @staticmethod
    def from_predictions(preds, labels) -> "MetricsReport":
        return MetricsReport.from_counts(confusion(preds, labels))

    @property
    def n_labels(self) -> int:
        return len(self.per_label_f1)

    def to_dict(self) -> dict:
        return {
            "per_label_f1": list(self.per_label_f1),
            "per_label_accuracy": list(self.per_label_accuracy),
            "f1_macro": self.f1_macro,
            "f1_micro": self.f1_micro,
            "accuracy": self.accuracy,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_header(self) -> list[str]:
        cols = [f"f1_au{i}" for i in range(self.n_labels)]
        cols += [f"acc_au{i}" for i in range(self.n_labels)]
        return cols + ["f1_macro", "f1_micro", "accuracy"]

    def csv_row(self) -> list[str]:
        vals = list(self.per_label_f1) + list(self.per_label_accuracy)
        vals += [self.f1_macro, self.f1_micro, self.accuracy]
        return [repr(float(v)) for v in vals]
