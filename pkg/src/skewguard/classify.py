"""Binary logistic regression fitted by iteratively reweighted least squares."""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.special import expit

from .errors import DimensionMismatch, SingularInformation, TooFewRows

_PIN = 1e-10


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LogitModel:
    intercept: float
    coefficients: np.ndarray
    converged: bool
    iterations: int
    separation: bool = False
    loglik: float = float("nan")

    @property
    def params(self):
        return np.concatenate([[self.intercept], self.coefficients])


def log_likelihood(params, X, y):
    eta = params[0] + X @ params[1:]
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def score(params, X, y):
    """Gradient of the log-likelihood with respect to (intercept, coefficients)."""
    r = y - expit(params[0] + X @ params[1:])
    return np.concatenate([[r.sum()], X.T @ r])


def fit_logit(X, y, max_iter=100, tol=1e-8, ridge=0.0):
    """Maximum-likelihood logistic regression with an intercept.

    Newton/IRLS updates with step halving (at most 20 halvings) whenever the
    log-likelihood would decrease.  Converged when the largest parameter
    change falls below ``tol``.

    ``ridge`` adds ``ridge * ||coefficients||^2`` to the negative
    log-likelihood (intercept unpenalized); off by default.

    Under (quasi-)complete separation the likelihood has no maximizer: the
    last iterate is returned with ``converged=False, separation=True`` and a
    :class:`ConvergenceWarning`.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n, p = X.shape
    if y.shape[0] != n:
        raise DimensionMismatch(f"X has {n} rows, y has {y.shape[0]}")
    if n <= p + 1:
        raise TooFewRows(f"need n > p + 1 rows, got n={n}, p={p}")
    if n and np.any(np.ptp(X, axis=0) > 1e3):
        warnings.warn("feature range exceeds 1e3; scale columns before fitting",
                      ConvergenceWarning, stacklevel=2)

    A = np.column_stack([np.ones(n), X])
    penalty = np.full(p + 1, 2.0 * ridge)
    penalty[0] = 0.0

    def objective(b):
        eta = A @ b
        return float(np.sum(y * eta - np.logaddexp(0.0, eta))) - ridge * float(b[1:] @ b[1:])

    beta = np.zeros(p + 1)
    ll = objective(beta)
    converged = separation = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(A @ beta)
        w = mu * (1.0 - mu)
        grad = A.T @ (y - mu) - penalty * beta
        info = (A * w[:, None]).T @ A + np.diag(penalty)
        pinned = bool(np.any((mu < _PIN) | (mu > 1.0 - _PIN)))
        try:
            step = sla.cho_solve(sla.cho_factor(info, lower=True), grad)
        except (np.linalg.LinAlgError, ValueError):
            if pinned:
                separation = True
                break
            raise SingularInformation("Fisher information matrix is singular") from None

        new = beta + step
        new_ll = objective(new)
        halvings = 0
        while not new_ll >= ll and halvings < 20:
            step = step / 2.0
            new = beta + step
            new_ll = objective(new)
            halvings += 1
        if not new_ll >= ll:
            # no ascent direction left at machine precision
            converged = float(np.max(np.abs(grad))) < 1e-6 * max(1.0, abs(ll))
            break
        change = float(np.max(np.abs(new - beta)))
        gain = new_ll - ll
        beta, ll = new, new_ll
        if change < tol:
            converged = True
            break
        mu_new = expit(A @ beta)
        if np.any((mu_new < _PIN) | (mu_new > 1.0 - _PIN)) and gain < 1e-8 * max(1.0, abs(ll)):
            separation = True
            break

    if separation:
        warnings.warn("classes are (quasi-)separated; returning last iterate",
                      ConvergenceWarning, stacklevel=2)
    elif not converged:
        warnings.warn(f"IRLS did not converge in {max_iter} iterations",
                      ConvergenceWarning, stacklevel=2)
    return LogitModel(
        intercept=float(beta[0]),
        coefficients=beta[1:].copy(),
        converged=converged and not separation,
        iterations=it,
        separation=separation,
        loglik=ll,
    )


def predict_proba(model, X):
    """Fitted probabilities ``expit(intercept + X @ coefficients)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if model.coefficients.shape[0] == 1 else X.reshape(1, -1)
    if X.shape[1] != model.coefficients.shape[0]:
        raise DimensionMismatch(
            f"model has {model.coefficients.shape[0]} coefficients, X has {X.shape[1]} columns"
        )
    return expit(model.intercept + X @ model.coefficients)
