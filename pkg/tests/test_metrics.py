import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewguard.errors import LengthMismatch, NoPositives, NonBinaryLabel, OneClassOnly
from skewguard.metrics import (
    ConfusionMatrix,
    confusion,
    curve_area,
    pr_auprc,
    read_curve_csv,
    roc_auc,
    summary_stats,
    write_curve_csv,
)


def mann_whitney(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(Fraction(1) if a > b else Fraction(1, 2) if a == b else 0 for a in pos for b in neg)
    return wins / (len(pos) * len(neg))


def average_precision(scores, labels):
    """Step rule over distinct cutoffs, evaluated in exact arithmetic."""
    P = sum(labels)
    total, prev_tp = Fraction(0), 0
    for c in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= c and y == 1)
        k = sum(1 for s in scores if s >= c)
        total += Fraction(tp - prev_tp, P) * Fraction(tp, k)
        prev_tp = tp
    return total


scored = st.lists(
    st.tuples(st.integers(0, 6).map(lambda v: v / 4), st.integers(0, 1)), min_size=2, max_size=40
).filter(lambda r: 0 < sum(y for _, y in r) < len(r))


def test_confusion_example():
    cm = confusion([0.9, 0.8, 0.4, 0.3, 0.5], [1, 0, 1, 0, 0], cutoff=0.5)
    assert cm == ConfusionMatrix(tp=1, fp=2, tn=1, fn=1)
    stats = summary_stats(cm)
    assert stats["accuracy"] == pytest.approx(0.4)
    assert stats["precision"] == pytest.approx(1 / 3)
    assert stats["recall"] == pytest.approx(0.5)
    assert stats["f1"] == pytest.approx(0.4)


def test_cutoff_is_inclusive():
    assert confusion([0.5], [1], 0.5).tp == 1


def test_empty_denominators_are_nan():
    stats = summary_stats(confusion([0.1, 0.2], [0, 0], cutoff=0.5))
    assert math.isnan(stats["precision"]) and math.isnan(stats["recall"]) and math.isnan(stats["f1"])
    assert stats["accuracy"] == 1.0
    assert math.isnan(summary_stats(ConfusionMatrix(0, 0, 0, 0))["accuracy"])


def test_roc_examples():
    assert roc_auc([0.1, 0.9], [0, 1]).area == 1.0
    assert roc_auc([0.9, 0.1], [0, 1]).area == 0.0
    assert roc_auc([0.5, 0.5, 0.5], [0, 1, 1]).area == 0.5
    r = roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert r.area == 0.75
    np.testing.assert_allclose(r.points[0], [0, 0])
    np.testing.assert_allclose(r.points[-1], [1, 1])


def test_auprc_example():
    r = pr_auprc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    # ranks: 1(pos) 2(neg) 3(pos) -> (1 + 2/3) / 2
    assert r.area == pytest.approx(5 / 6)
    np.testing.assert_allclose(r.points[0], [0, 1])


@settings(max_examples=200, deadline=None)
@given(scored)
def test_auc_equals_mann_whitney(rows):
    s, y = zip(*rows)
    assert roc_auc(s, y).area == pytest.approx(float(mann_whitney(s, y)), abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(scored)
def test_auprc_equals_exact_step_sum(rows):
    s, y = zip(*rows)
    r = pr_auprc(s, y)
    assert r.area == pytest.approx(float(average_precision(s, y)), abs=1e-12)
    assert curve_area(r) == pytest.approx(r.area, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(scored, st.integers(0, 1000))
def test_invariant_to_monotone_transform_and_order(rows, seed):
    s, y = map(np.array, zip(*rows))
    perm = np.random.default_rng(seed).permutation(len(s))
    t = np.exp(3 * s) - 7
    assert roc_auc(t[perm], y[perm]).area == roc_auc(s, y).area
    assert pr_auprc(t[perm], y[perm]).area == pytest.approx(pr_auprc(s, y).area, abs=1e-15)
    assert roc_auc(-s, y).area == pytest.approx(1 - roc_auc(s, y).area, abs=1e-15)


def test_reference_implementation_agrees():
    skm = pytest.importorskip("sklearn.metrics")
    g = np.random.default_rng(0)
    y = (g.uniform(size=500) < 0.1).astype(int)
    s = np.round(g.standard_normal(500) + y, 1)
    assert roc_auc(s, y).area == pytest.approx(skm.roc_auc_score(y, s), abs=1e-12)
    assert pr_auprc(s, y).area == pytest.approx(skm.average_precision_score(y, s), abs=1e-12)


def test_errors():
    with pytest.raises(OneClassOnly):
        roc_auc([0.1, 0.2], [1, 1])
    with pytest.raises(NoPositives):
        pr_auprc([0.1, 0.2], [0, 0])
    with pytest.raises(LengthMismatch):
        roc_auc([0.1], [0, 1])
    with pytest.raises(NonBinaryLabel):
        confusion([0.1, 0.2], [0, 2], 0.5)


def test_curve_csv_round_trip(tmp_path):
    g = np.random.default_rng(1)
    y = g.integers(0, 2, 50)
    s = g.uniform(size=50)
    for r in (roc_auc(s, y), pr_auprc(s, y)):
        path = tmp_path / f"{r.kind}.csv"
        write_curve_csv(r, path)
        back = read_curve_csv(path)
        assert back.kind == r.kind and back.area == r.area
        np.testing.assert_array_equal(back.points, r.points)
        assert path.read_text().splitlines()[1] == "x,y"
