"""FastMCD: robust location and scatter by minimum covariance determinant.

The search follows the usual FastMCD schedule: many random elemental
(p+1)-row starts, two C-steps each, then the best few candidates are iterated
to convergence.  The raw scatter is made consistent at the normal model and a
reweighting step at the 97.5% chi-square quantile is applied by default.
"""
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, SingularData, TooFewRows
from .numkit import RngStream, chi2_cdf, chi2_quantile, cholesky

REWEIGHT_PROB = 0.975


@dataclass(frozen=True, eq=False)
class RobustFit:
    """Result of :func:`fast_mcd`.

    ``center``/``scatter`` are the final (reweighted, consistency-corrected)
    estimates.  ``subset`` is the raw h-subset of minimum covariance
    determinant and ``raw_determinant`` the determinant of its sample
    covariance.  ``weights`` flags the rows kept by the reweighting step.
    """

    center: np.ndarray
    scatter: np.ndarray
    h: int
    subset: np.ndarray
    raw_determinant: float
    raw_center: np.ndarray
    raw_scatter: np.ndarray
    weights: np.ndarray = None
    reweighted: bool = True

    @property
    def p(self):
        return self.center.shape[0]

    @property
    def chol(self):
        L = self.__dict__.get("_chol")
        if L is None:
            L = cholesky(self.scatter)
            object.__setattr__(self, "_chol", L)
        return L

    @classmethod
    def from_moments(cls, center, scatter):
        """Wrap a given center and scatter (no subset information)."""
        center = np.asarray(center, dtype=float)
        scatter = np.asarray(scatter, dtype=float)
        return cls(center, scatter, 0, np.empty(0, dtype=np.intp),
                   float(np.linalg.det(scatter)), center, scatter, None, False)


def h_subset_size(n, p, alpha=0.5):
    """Subset size for coverage ``alpha``; ``(n + p + 1) // 2`` at alpha=0.5."""
    half = (n + p + 1) // 2
    return int(np.floor(2 * half - n + 2 * (n - half) * alpha))


def consistency_factor(p, prob):
    """Factor making the covariance of the ``prob``-fraction of normal data
    with smallest distances consistent for the true covariance."""
    q = chi2_quantile(p, prob)
    return prob / float(chi2_cdf(q, p + 2))


def mahalanobis_sq_rows(X, center, scatter_chol):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != center.shape[0]:
        raise DimensionMismatch(f"rows have {X.shape[1]} columns, fit has {center.shape[0]}")
    return _kernels.mahalanobis_sq_rows(X, center, scatter_chol)


def mahalanobis_sq(x, fit):
    """Squared robust distance ``(x - center)' scatter^-1 (x - center)``.

    ``x`` may be a single p-vector (returns a float) or an (m, p) array.
    """
    x = np.asarray(x, dtype=float)
    d2 = mahalanobis_sq_rows(x, fit.center, fit.chol)
    return float(d2[0]) if x.ndim == 1 else d2


def c_step(X, center, scatter, h=None):
    """One concentration step.

    Returns ``(center, scatter, subset, det, degenerate)``: the mean and
    sample covariance of the h rows closest to ``center`` in the metric of
    ``scatter``, the sorted subset, its covariance determinant and whether
    that covariance is singular.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    h = h_subset_size(n, p) if h is None else int(h)
    L = cholesky(np.asarray(scatter, dtype=float))
    d2 = mahalanobis_sq_rows(X, np.asarray(center, dtype=float), L)
    subset = np.sort(np.argsort(d2, kind="stable")[:h])
    Xs = X[subset]
    new_center = Xs.mean(axis=0)
    new_scatter = np.cov(Xs, rowvar=False).reshape(p, p)
    det = float(np.linalg.det(new_scatter))
    try:
        cholesky(new_scatter)
        degenerate = False
    except Exception:
        degenerate = True
    return new_center, new_scatter, subset, det, degenerate


def _start_permutations(n, p, n_starts, rng):
    if n_starts == "all":
        rows = []
        everything = np.arange(n)
        for comb in combinations(range(n), p + 1):
            rest = np.setdiff1d(everything, comb, assume_unique=True)
            rows.append(np.concatenate([comb, rest]))
        return np.asarray(rows, dtype=np.intp)
    return np.asarray(
        [rng.fork("start", r).permutation(n) for r in range(int(n_starts))], dtype=np.intp
    )


def fast_mcd(X, alpha=0.5, n_starts=500, rng=None, n_best=10, n_csteps=2,
             reweight=True, max_iter=100, tol=1e-12):
    """Minimum covariance determinant estimate of location and scatter.

    Parameters
    ----------
    X : (n, p) array
    alpha : float
        Coverage; ``alpha=0.5`` gives the maximal breakdown point.
    n_starts : int or "all"
        Number of random elemental starts, or ``"all"`` to enumerate every
        (p+1)-row subset (only sensible for tiny n).
    rng : RngStream, optional
        Start ``r`` draws its row permutation from ``rng.fork("start", r)``.
    n_best : int or None
        Candidates kept after the preliminary C-steps (None keeps all).
    n_csteps : int
        Preliminary C-steps per start.
    reweight : bool
        Apply the 97.5% reweighting step.

    Raises
    ------
    TooFewRows
        If ``n < 2 (p + 1)``.
    SingularData
        If h or more rows lie on a hyperplane (exact fit).
    """
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("X must be two-dimensional")
    n, p = X.shape
    if n < 2 * (p + 1):
        raise TooFewRows(f"FastMCD needs n >= 2(p+1) = {2 * (p + 1)}, got n={n}")
    if rng is None:
        rng = RngStream(0)
    h = h_subset_size(n, p, alpha)

    perms = _start_permutations(n, p, n_starts, rng)
    subsets, logdets = _kernels.elemental_stage(X, perms, h, n_csteps)
    if np.isneginf(logdets).any():
        raise SingularData(f"at least {h} rows lie on a hyperplane")

    order = np.argsort(logdets, kind="stable")
    if n_best is not None:
        order = order[:n_best]
    best = None
    for r in order:
        sub, logdet, _, _, _ = _kernels.csteps(X, subsets[r], h, max_iter, tol)
        if not np.isfinite(logdet):
            raise SingularData(f"at least {h} rows lie on a hyperplane")
        # strict < keeps the lowest start id among equal determinants
        if best is None or logdet < best[1]:
            best = (sub, logdet)
    subset, logdet = best

    Xs = X[subset]
    raw_center = Xs.mean(axis=0)
    raw_cov = np.cov(Xs, rowvar=False).reshape(p, p)
    raw_scatter = raw_cov * consistency_factor(p, h / n)

    center, scatter, weights = raw_center, raw_scatter, None
    if reweight:
        L = cholesky(raw_scatter)
        d2 = _kernels.mahalanobis_sq_rows(X, raw_center, L)
        weights = d2 <= chi2_quantile(p, REWEIGHT_PROB)
        if weights.sum() > p + 1:
            Xw = X[weights]
            center = Xw.mean(axis=0)
            scatter = np.cov(Xw, rowvar=False).reshape(p, p)
            scatter = scatter * consistency_factor(p, REWEIGHT_PROB)
    try:
        cholesky(scatter)
    except Exception:
        raise SingularData("final scatter estimate is singular") from None

    return RobustFit(
        center=center,
        scatter=scatter,
        h=h,
        subset=subset,
        raw_determinant=float(np.exp(logdet)),
        raw_center=raw_center,
        raw_scatter=raw_scatter,
        weights=weights,
        reweighted=bool(reweight),
    )
