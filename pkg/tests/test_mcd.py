import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewguard.errors import SingularData, TooFewRows
from skewguard.mcd import (
    RobustFit,
    c_step,
    consistency_factor,
    fast_mcd,
    h_subset_size,
    mahalanobis_sq,
)
from skewguard.numkit import RngStream


def brute_force_min_det(X, h):
    """Smallest subset-covariance determinant over every h-subset."""
    best = np.inf
    for comb in itertools.combinations(range(X.shape[0]), h):
        best = min(best, np.linalg.det(np.cov(X[list(comb)], rowvar=False)))
    return best


def test_h_subset_size():
    assert h_subset_size(12, 2) == 7
    assert h_subset_size(70, 10) == 40
    assert h_subset_size(100, 3, alpha=1.0) == 100


def test_consistency_factor_is_above_one():
    assert consistency_factor(2, 0.5) > 1.0
    assert consistency_factor(2, 0.9999999) == pytest.approx(1.0, abs=1e-4)


def test_mahalanobis_examples():
    fit = RobustFit.from_moments(np.zeros(2), np.eye(2))
    assert mahalanobis_sq([3.0, 4.0], fit) == pytest.approx(25.0)
    assert mahalanobis_sq([0.0, 0.0], fit) == 0.0
    fit = RobustFit.from_moments(np.zeros(2), np.diag([4.0, 1.0]))
    assert mahalanobis_sq([2.0, 1.0], fit) == pytest.approx(2.0)


def test_mahalanobis_affine_invariance():
    g = np.random.default_rng(0)
    S = np.cov(g.standard_normal((30, 3)), rowvar=False)
    fit = RobustFit.from_moments(g.standard_normal(3), S)
    A = g.standard_normal((3, 3)) + 3 * np.eye(3)
    b = g.standard_normal(3)
    mapped = RobustFit.from_moments(A @ fit.center + b, A @ S @ A.T)
    x = g.standard_normal((5, 3))
    np.testing.assert_allclose(mahalanobis_sq(x @ A.T + b, mapped), mahalanobis_sq(x, fit), rtol=1e-9)


def test_c_step_discards_gross_outliers():
    g = np.random.default_rng(4)
    X = g.standard_normal((20, 2))
    X[:4] = 100.0 + g.standard_normal((4, 2))
    h = h_subset_size(20, 2)
    center, scatter = np.median(X, axis=0), np.eye(2)
    for _ in range(2):
        center, scatter, subset, det, deg = c_step(X, center, scatter, h)
        # oracle: rank distances with an explicit inverse
        inv = np.linalg.inv(scatter)
    assert not set(subset) & {0, 1, 2, 3}
    # the subset is exactly the h rows closest under the previous fit
    c2, s2, sub2, det2, _ = c_step(X, center, scatter, h)
    d = np.einsum("ij,jk,ik->i", X - center, inv, X - center)
    assert set(sub2) == set(np.argsort(d, kind="stable")[:h])
    assert det2 <= det * (1 + 1e-12)


def test_c_step_fixed_point():
    g = np.random.default_rng(5)
    X = g.standard_normal((40, 3))
    fit = fast_mcd(X, reweight=False, rng=RngStream(1))
    Xs = X[fit.subset]
    center, scatter, subset, det, _ = c_step(X, Xs.mean(axis=0), np.cov(Xs, rowvar=False))
    assert np.array_equal(subset, fit.subset)
    assert det == pytest.approx(fit.raw_determinant, rel=1e-10)


def test_c_step_no_trimming_when_h_equals_n():
    g = np.random.default_rng(6)
    X = g.standard_normal((15, 2))
    center, scatter, subset, _, _ = c_step(X, np.zeros(2), np.eye(2), h=15)
    assert np.array_equal(subset, np.arange(15))
    np.testing.assert_allclose(center, X.mean(axis=0))
    np.testing.assert_allclose(scatter, np.cov(X, rowvar=False))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_csteps_monotone(seed, p):
    from skewguard import _kernels

    g = np.random.default_rng(seed)
    n = 10 * p
    X = g.standard_normal((n, p))
    X[: n // 5] *= 8
    h = h_subset_size(n, p)
    start = np.sort(g.permutation(n)[:h])
    for b in (_kernels.python_backend, _kernels.compiled_backend):
        if b is None:
            continue
        _, _, _, _, trace = b.csteps(X, start, h, 100, 0.0)
        assert all(t1 <= t0 + 1e-12 for t0, t1 in zip(trace, trace[1:]))


def test_fast_mcd_normal_consistency(backend):
    # n=2000 keeps 0.15 at several standard errors of the reweighted estimate
    X = np.random.default_rng(7).standard_normal((2000, 2))
    fit = fast_mcd(X, rng=RngStream(3))
    assert np.abs(fit.center).max() < 0.15
    assert np.abs(fit.scatter - np.eye(2)).max() < 0.15
    assert fit.h == 1001 and len(np.unique(fit.subset)) == fit.h
    assert fit.raw_determinant == pytest.approx(np.linalg.det(np.cov(X[fit.subset], rowvar=False)))


def test_fast_mcd_exhaustive_matches_brute_force(backend):
    for seed in range(8):
        X = np.random.default_rng(seed).standard_t(3, size=(12, 2))
        fit = fast_mcd(X, n_starts="all", reweight=False)
        subset_det = np.linalg.det(np.cov(X[fit.subset], rowvar=False))
        assert subset_det == pytest.approx(brute_force_min_det(X, fit.h), rel=1e-12)


def test_fast_mcd_ignores_far_contamination(backend):
    g = np.random.default_rng(8)
    X = g.standard_normal((100, 3))
    X[::10] = 50.0 + g.standard_normal((10, 3))
    fit = fast_mcd(X, rng=RngStream(2))
    assert not set(fit.subset) & set(range(0, 100, 10))
    assert not fit.weights[::10].any()


def test_fast_mcd_affine_equivariance(backend):
    g = np.random.default_rng(9)
    X = g.standard_normal((60, 3))
    X[:6] += 8
    A = np.array([[2.0, 0.3, 0.0], [0.0, 0.5, -0.2], [1.0, 0.0, 3.0]])
    b = np.array([5.0, -1.0, 2.0])
    f1 = fast_mcd(X, rng=RngStream(4))
    f2 = fast_mcd(X @ A.T + b, rng=RngStream(4))
    assert np.array_equal(f1.subset, f2.subset)
    np.testing.assert_allclose(f2.center, A @ f1.center + b, rtol=1e-6)
    np.testing.assert_allclose(f2.scatter, A @ f1.scatter @ A.T, rtol=1e-6, atol=1e-9)


def test_fast_mcd_deterministic():
    X = np.random.default_rng(10).standard_normal((50, 4))
    a = fast_mcd(X, rng=RngStream(11))
    b = fast_mcd(X, rng=RngStream(11))
    assert a.center.tobytes() == b.center.tobytes()
    assert np.array_equal(a.subset, b.subset)


def test_raw_versus_reweighted():
    X = np.random.default_rng(12).standard_normal((80, 2))
    raw = fast_mcd(X, reweight=False, rng=RngStream(0))
    rew = fast_mcd(X, reweight=True, rng=RngStream(0))
    assert raw.weights is None and rew.weights is not None
    assert np.array_equal(raw.center, raw.raw_center)
    assert np.array_equal(raw.subset, rew.subset)


def test_too_few_rows():
    with pytest.raises(TooFewRows):
        fast_mcd(np.random.default_rng(0).standard_normal((5, 2)))


def test_exact_fit_is_singular():
    g = np.random.default_rng(13)
    t = g.standard_normal(30)
    X = np.column_stack([t, 2 * t + 1])
    X[:5] += g.standard_normal((5, 2))
    with pytest.raises(SingularData):
        fast_mcd(X, rng=RngStream(0))
