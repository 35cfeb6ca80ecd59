"""Imbalance-aware evaluation: confusion statistics, ROC/AUC and PR/AUPRC.

Conventions: label 1 is the positive (minority) class; an observation is
predicted positive iff ``score >= cutoff``; tied scores always move together.
"""
from dataclasses import dataclass

import numpy as np

from .dataio import atomic_write_text, format_float
from .errors import LengthMismatch, NoPositives, NonBinaryLabel, OneClassOnly


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True, eq=False)
class CurveReport:
    """Curve points as an (k, 2) array of (x, y) plus the scalar area.

    ROC: x = false positive rate, y = true positive rate, trapezoid area.
    PR: x = recall, y = precision, step (average precision) area.
    """

    points: np.ndarray
    area: float
    kind: str

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]


def _check(scores, labels):
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise LengthMismatch(f"{s.shape[0]} scores but {y.shape[0]} labels")
    if y.size and not np.isin(y, (0, 1)).all():
        raise NonBinaryLabel("labels must be 0 or 1")
    return s, y.astype(np.int64)


def confusion(scores, labels, cutoff):
    s, y = _check(scores, labels)
    pred = s >= cutoff
    tp = int(np.count_nonzero(pred & (y == 1)))
    fp = int(np.count_nonzero(pred & (y == 0)))
    fn = int(np.count_nonzero(~pred & (y == 1)))
    tn = int(np.count_nonzero(~pred & (y == 0)))
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num, den):
    return num / den if den else float("nan")


def summary_stats(cm):
    """Accuracy, error rate, precision, recall and F1.

    Ratios with a zero denominator are NaN, never 0.
    """
    accuracy = _ratio(cm.tp + cm.tn, cm.total)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    if np.isnan(precision) or np.isnan(recall):
        f1 = float("nan")
    else:
        f1 = _ratio(2.0 * precision * recall, precision + recall)
    return {
        "accuracy": accuracy,
        "error_rate": 1.0 - accuracy,
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }


def _cumulative_counts(s, y):
    """Cumulative (tp, fp) at each distinct cutoff, highest score first."""
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    # last position of each block of tied scores
    ends = np.flatnonzero(np.diff(s_sorted) != 0)
    ends = np.append(ends, s_sorted.size - 1)
    tp = np.cumsum(y_sorted)[ends]
    fp = (ends + 1) - tp
    return tp, fp, s_sorted[ends]


def roc_auc(scores, labels):
    """ROC curve over all distinct cutoffs and its trapezoid area.

    The area equals the Mann-Whitney probability that a random positive
    outscores a random negative, ties counted one half.
    """
    s, y = _check(scores, labels)
    P = int(y.sum())
    N = y.size - P
    if P == 0 or N == 0:
        raise OneClassOnly(f"ROC needs both classes (positives={P}, negatives={N})")
    tp, fp, _ = _cumulative_counts(s, y)
    tp = np.concatenate([[0], tp])
    fp = np.concatenate([[0], fp])
    # integer trapezoid sum, one rounding at the end
    twice_area = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    area = twice_area / (2.0 * P * N)
    points = np.column_stack([fp / N, tp / P])
    return CurveReport(points=points, area=area, kind="roc")


def pr_auprc(scores, labels):
    """Precision-recall curve and its average-precision area.

    Points run from (0, 1) through (recall, precision) at each distinct
    cutoff, highest first.  The area is the step sum
    ``sum_k (recall_k - recall_{k-1}) * precision_k``.
    """
    s, y = _check(scores, labels)
    P = int(y.sum())
    if P == 0:
        raise NoPositives("precision-recall needs at least one positive")
    tp, fp, _ = _cumulative_counts(s, y)
    precision = tp / (tp + fp)
    recall = tp / P
    dtp = np.diff(np.concatenate([[0], tp]))
    area = float(np.sum(dtp * precision) / P)
    points = np.column_stack([np.concatenate([[0.0], recall]), np.concatenate([[1.0], precision])])
    return CurveReport(points=points, area=area, kind="pr")


def curve_area(report):
    """Re-integrate ``report.points`` with the rule matching its kind."""
    x, y = report.x, report.y
    if report.kind == "roc":
        return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))
    return float(np.sum(np.diff(x) * y[1:]))


def write_curve_csv(report, path):
    """Two-column ``x,y`` CSV preceded by a ``# kind=..., area=...`` line."""
    lines = [f"# kind={report.kind},area={format_float(report.area)}", "x,y"]
    lines += [f"{format_float(a)},{format_float(b)}" for a, b in report.points]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_curve_csv(path):
    with open(path, encoding="utf-8") as fh:
        meta = fh.readline().lstrip("#").strip()
        fields = dict(item.split("=", 1) for item in meta.split(","))
        fh.readline()
        pts = np.loadtxt(fh, delimiter=",", ndmin=2)
    return CurveReport(points=pts, area=float(fields["area"]), kind=fields["kind"])
