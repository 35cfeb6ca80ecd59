"""Small deterministic numerical kernels shared by the rest of the package.

Covers what the robust fit and the samplers need and nothing more: a checked
Cholesky factorization, forward substitution, multivariate normal draws,
chi-square quantiles and seedable random streams.
"""
import zlib

import numpy as np
from scipy import linalg as sla
from scipy import special

from .errors import (
    DimensionMismatch,
    InvalidProbability,
    NotPositiveDefinite,
    SingularMatrix,
)

_MASK64 = (1 << 64) - 1
_EPS = np.finfo(float).eps


def _tag_to_int(tag):
    if isinstance(tag, (int, np.integer)):
        return int(tag) & _MASK64
    # crc32 is stable across processes and platforms, unlike hash()
    return zlib.crc32(str(tag).encode("utf-8"))


class RngStream:
    """A seedable, splittable random stream.

    The stream is identified by ``(seed, stream_id)`` plus an optional path of
    fork tags.  Draws come from numpy's counter-based Philox bit generator
    keyed through a ``SeedSequence``, so equal keys give identical sequences on
    every platform.  Normal variates use numpy's ziggurat transform.

    A stream is meant to be owned by one consumer.  Use :meth:`fork` to derive
    independent child streams (per repetition, per purpose) instead of sharing.
    """

    def __init__(self, seed, stream_id=0, _path=()):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.path = tuple(_path)
        ss = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id,) + self.path
        )
        self._gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, path={self.path})"

    def fork(self, *tags):
        """Child stream keyed by this stream's key extended with ``tags``.

        Tags may be integers or strings.  Forking does not consume draws from
        the parent.
        """
        path = self.path + tuple(_tag_to_int(t) for t in tags)
        return RngStream(self.seed, self.stream_id, path)

    @property
    def generator(self):
        return self._gen

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self._gen.choice(a, size=size, replace=replace)


def _as_square(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def is_symmetric(m, rtol=1e-12):
    m = _as_square(m)
    scale = np.abs(m).max() if m.size else 0.0
    return bool(np.abs(m - m.T).max(initial=0.0) <= rtol * max(scale, 1e-300))


def cholesky(m):
    """Lower-triangular ``L`` with ``m = L @ L.T``.

    Raises
    ------
    NotPositiveDefinite
        If ``m`` is not symmetric or a pivot falls at or below
        ``dim * eps * max(diag(m))``.
    """
    m = _as_square(m)
    dim = m.shape[0]
    if not is_symmetric(m):
        raise NotPositiveDefinite("matrix is not symmetric")
    max_diag = float(np.max(np.diag(m))) if dim else 0.0
    if dim and max_diag <= 0.0:
        raise NotPositiveDefinite("non-positive diagonal")
    try:
        L = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(L) ** 2
    if dim and (not np.all(np.isfinite(L)) or pivots.min() <= dim * _EPS * max_diag):
        raise NotPositiveDefinite(f"pivot {pivots.min():.3g} below tolerance")
    return L


def solve_lower(L, b):
    """Solve ``L @ x = b`` by forward substitution.

    ``b`` may be a vector or a matrix of right-hand sides (one per column).
    """
    L = _as_square(L)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != L.shape[0]:
        raise DimensionMismatch(f"L is {L.shape}, b has {b.shape[0]} rows")
    if L.shape[0] and np.any(np.diag(L) == 0.0):
        raise SingularMatrix("zero pivot in triangular solve")
    return sla.solve_triangular(L, b, lower=True, check_finite=False)


def mvn_sample(center, scatter_chol, rng, size=None):
    """Draw ``center + L @ u`` with ``u`` standard normal from ``rng``.

    With ``size=None`` a single p-vector is returned, otherwise a
    ``(size, p)`` array whose rows are independent draws.
    """
    center = np.asarray(center, dtype=float)
    L = np.asarray(scatter_chol, dtype=float)
    p = center.shape[-1]
    if L.shape != (p, p):
        raise DimensionMismatch(f"center has dim {p}, factor has shape {L.shape}")
    if size is None:
        u = rng.standard_normal(p)
        return center + L @ u
    u = rng.standard_normal((size, p))
    return center + u @ L.T


def chi2_cdf(x, df):
    """CDF of the chi-square distribution (regularized lower incomplete gamma)."""
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return special.gammainc(df / 2.0, x / 2.0)


def _chi2_pdf(x, df):
    k = df / 2.0
    return np.exp((k - 1.0) * np.log(x) - x / 2.0 - k * np.log(2.0) - special.gammaln(k))


def chi2_quantile(df, prob):
    """Quantile of the chi-square distribution with ``df`` degrees of freedom.

    Safeguarded Newton iteration on the regularized incomplete gamma function,
    started from the Wilson-Hilferty approximation.  Falls back to bisection
    whenever a Newton step leaves the current bracket.
    """
    if not (0.0 < prob < 1.0):
        raise InvalidProbability(f"prob must lie in (0, 1), got {prob}")
    if df <= 0:
        raise InvalidProbability(f"df must be positive, got {df}")
    df = float(df)

    # bracket [lo, hi] with cdf(lo) < prob < cdf(hi)
    lo, hi = 0.0, max(1.0, df)
    while chi2_cdf(hi, df) < prob:
        lo, hi = hi, 2.0 * hi

    z = special.ndtri(prob)
    a = 2.0 / (9.0 * df)
    x = df * (1.0 - a + z * np.sqrt(a)) ** 3
    if not (lo < x < hi):
        x = 0.5 * (lo + hi)

    for _ in range(200):
        f = chi2_cdf(x, df) - prob
        if f == 0.0:
            return float(x)
        if f < 0:
            lo = x
        else:
            hi = x
        dens = _chi2_pdf(x, df)
        step = f / dens if dens > 0 else np.inf
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4 * _EPS * max(abs(x_new), 1e-300):
            return float(x_new)
        x = x_new
    return float(x)
