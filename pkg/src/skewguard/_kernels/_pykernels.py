"""Pure numpy implementation of the FastMCD inner loops.

Mirrors ``_ckernels.pyx`` exactly in semantics: same subset selection rule
(h smallest squared distances, ties to the lower row index), same
regularization of singular subsets, same stopping rules.
"""
import numpy as np
from scipy.linalg import solve_triangular

_EPS = np.finfo(float).eps
REG_FACTOR = 1e-8


def subset_stats(X, idx):
    Xs = X[idx]
    center = Xs.mean(axis=0)
    D = Xs - center
    cov = (D.T @ D) / (len(idx) - 1)
    return center, cov


def factor(cov):
    """(L, logdet, degenerate) for a subset covariance.

    A singular ``cov`` is ridge-regularized by ``1e-8 * trace / p`` so ranking
    can continue; its reported log-determinant is then ``-inf``.
    """
    p = cov.shape[0]
    L = _chol(cov)
    if L is not None:
        return L, 2.0 * float(np.sum(np.log(np.diag(L)))), False
    tr = float(np.trace(cov))
    reg = REG_FACTOR * tr / p if tr > 0 else 1.0
    L = _chol(cov + reg * np.eye(p))
    if L is None:  # pragma: no cover - trace-scaled ridge is always PD
        L = np.eye(p)
    return L, -np.inf, True


def _chol(S):
    p = S.shape[0]
    max_diag = float(np.max(np.diag(S)))
    if not max_diag > 0:
        return None
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None
    piv = np.diag(L) ** 2
    if not np.all(np.isfinite(piv)) or piv.min() <= p * _EPS * max_diag:
        return None
    return L


def mahalanobis_sq_rows(X, center, L):
    Z = solve_triangular(L, (X - center).T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", Z, Z)


def select_h(d2, h):
    order = np.argsort(d2, kind="stable")[:h]
    return np.sort(order)


def csteps(X, subset, h, max_steps, tol):
    """Iterate C-steps from ``subset``.

    Returns ``(subset, logdet, steps, degenerate, trace)`` where ``trace`` lists
    the log-determinant after every step (starting subset first).  Stops when
    the subset repeats, the relative determinant change drops to ``tol`` or
    ``max_steps`` steps were taken.
    """
    X = np.asarray(X, dtype=float)
    subset = np.sort(np.asarray(subset, dtype=np.intp))
    center, cov = subset_stats(X, subset)
    L, logdet, deg = factor(cov)
    trace = [logdet]
    steps = 0
    while steps < max_steps and np.isfinite(logdet):
        new = select_h(mahalanobis_sq_rows(X, center, L), h)
        if np.array_equal(new, subset):
            break
        steps += 1
        subset = new
        center, cov = subset_stats(X, subset)
        L, new_logdet, deg = factor(cov)
        trace.append(new_logdet)
        change = abs(new_logdet - logdet)
        logdet = new_logdet
        if np.isfinite(logdet) and change <= tol:
            break
    return subset, logdet, steps, deg, trace


def elemental_stage(X, perms, h, n_csteps):
    """Run every random start and its preliminary C-steps.

    ``perms[r]`` is a row permutation; start ``r`` takes its first p+1 rows,
    extended one row at a time while their covariance stays singular.
    Returns ``(subsets, logdets)`` with one sorted h-subset per start.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    n_starts = perms.shape[0]
    subsets = np.empty((n_starts, h), dtype=np.intp)
    logdets = np.empty(n_starts)
    for r in range(n_starts):
        k = p + 1
        while True:
            idx = perms[r, :k]
            center, cov = subset_stats(X, idx)
            L = _chol(cov)
            if L is not None or k >= n:
                break
            k += 1
        if L is None:
            L, _, _ = factor(cov)
        first = select_h(mahalanobis_sq_rows(X, center, L), h)
        sub, ld, _, _, _ = csteps(X, first, h, n_csteps, 0.0)
        subsets[r] = sub
        logdets[r] = ld
    return subsets, logdets
