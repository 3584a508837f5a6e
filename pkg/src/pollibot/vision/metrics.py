"""Patch-level confusion counts and precision / recall."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

REPORT_HEADER = ("tp", "fp", "tn", "fn", "precision", "recall")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer")
            object.__setattr__(self, name, int(v))

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    @classmethod
    def from_class_totals(cls, pos_total: int, pos_correct: int, neg_total: int, neg_correct: int):
        """Counts from per-class test totals and correctly classified patches."""
        if not (0 <= pos_correct <= pos_total and 0 <= neg_correct <= neg_total):
            raise ValueError("correct counts must lie within their totals")
        return cls(tp=pos_correct, fn=pos_total - pos_correct, tn=neg_correct, fp=neg_total - neg_correct)

    def add(self, truth: bool, predicted: bool) -> "ConfusionCounts":
        if truth:
            return self + (ConfusionCounts(tp=1) if predicted else ConfusionCounts(fn=1))
        return self + (ConfusionCounts(fp=1) if predicted else ConfusionCounts(tn=1))


def metrics(counts: ConfusionCounts) -> dict[str, float]:
    """Precision and recall; either is 0 when its denominator is 0."""
    p_den = counts.tp + counts.fp
    r_den = counts.tp + counts.fn
    return {
        "precision": counts.tp / p_den if p_den else 0.0,
        "recall": counts.tp / r_den if r_den else 0.0,
    }


def report_csv(counts: ConfusionCounts) -> str:
    m = metrics(counts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    w.writerow([counts.tp, counts.fp, counts.tn, counts.fn, f"{m['precision']:.6f}", f"{m['recall']:.6f}"])
    return buf.getvalue()


def read_counts(text: str) -> ConfusionCounts:
    """Parse a CSV with at least the columns tp, fp, tn, fn (first data row)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("counts file has no data row")
    try:
        return ConfusionCounts(**{k: int(rows[0][k]) for k in ("tp", "fp", "tn", "fn")})
    except (KeyError, TypeError) as exc:
        raise ValueError("counts file needs columns tp, fp, tn, fn") from exc
