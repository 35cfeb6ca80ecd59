"""Minority oversampling: SMOTE, ROSE and robROSE.

robROSE fits a FastMCD estimate to the minority rows, drops rows whose
squared robust distance reaches the chi-square cutoff, and draws each
synthetic row from a normal kernel centred at a retained minority row with
covariance ``(h * c)**2 * scatter``.  ROSE uses a diagonal kernel built from
the classical per-column standard deviations and keeps every row.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import mcd
from .dataio import Dataset, concat
from .errors import (
    EmptyInlierSet,
    InvalidConfig,
    ZeroVarianceColumn,
)
from .numkit import RngStream, chi2_quantile, cholesky, mvn_sample

METHODS = ("smote", "rose", "robrose")


class OversampleWarning(UserWarning):
    pass


@dataclass(frozen=True)
class OversampleConfig:
    """Oversampling parameters.

    m : final minority size as a multiple of the original minority count
    h : kernel shrink constant (0 gives a degenerate kernel: exact copies)
    cutoff_prob : chi-square probability for the robROSE outlier cutoff
    k : SMOTE neighbour count
    smoothing_n : "minority" uses the minority count in the smoothing
        constant, "total" uses the full training size
    """

    m: float = 10.0
    h: float = 0.5
    cutoff_prob: float = 0.999
    k: int = 5
    seed: int = 0
    smoothing_n: str = "minority"
    mcd_starts: int = 500
    reweight: bool = True

    def __post_init__(self):
        if not self.m >= 1:
            raise InvalidConfig(f"m must be >= 1, got {self.m}")
        if not self.h >= 0:
            raise InvalidConfig(f"h must be >= 0, got {self.h}")
        if not 0.5 < self.cutoff_prob < 1:
            raise InvalidConfig(f"cutoff_prob must lie in (0.5, 1), got {self.cutoff_prob}")
        if self.k < 1:
            raise InvalidConfig(f"k must be >= 1, got {self.k}")
        if self.smoothing_n not in ("minority", "total"):
            raise InvalidConfig(f"smoothing_n must be 'minority' or 'total'")

    def n_synthetic(self, n1):
        """round((m - 1) * n1), halves rounded up."""
        return int(np.floor((self.m - 1.0) * n1 + 0.5))


@dataclass(frozen=True, eq=False)
class OversampleResult:
    """Synthetic minority rows with their provenance.

    ``seeds[i]`` and the entries of ``excluded`` are row indices into the
    dataset that was oversampled.
    """

    Z: np.ndarray
    cat: np.ndarray
    seeds: np.ndarray
    excluded: np.ndarray
    method: str
    fit: object = None
    kernel_cov: np.ndarray = None
    fallback: bool = False
    info: dict = field(default_factory=dict)


def smoothing_constant(p, n):
    """Normal-reference smoothing constant ``(4 / ((p + 2) n)) ** (1 / (p + 4))``."""
    return (4.0 / ((p + 2.0) * n)) ** (1.0 / (p + 4.0))


def flag_outliers(X1, fit, cutoff_prob=0.999):
    """Split minority rows by squared robust distance.

    Returns ``(inliers, excluded)`` as positional indices into ``X1``;
    inliers satisfy ``d2 < chi2_quantile(p, cutoff_prob)``.
    """
    X1 = np.atleast_2d(np.asarray(X1, dtype=float))
    d2 = mcd.mahalanobis_sq_rows(X1, fit.center, fit.chol)
    keep = d2 < chi2_quantile(X1.shape[1], cutoff_prob)
    inliers = np.flatnonzero(keep)
    if inliers.size == 0:
        raise EmptyInlierSet("every minority row was flagged as an outlier")
    return inliers, np.flatnonzero(~keep)


def _rng(cfg, rng):
    return rng if rng is not None else RngStream(cfg.seed)


def _smoothing_n(d, cfg):
    return d.n1 if cfg.smoothing_n == "minority" else d.n


def _result(d, method, local_seeds, Z, excluded_local=(), **kw):
    idx1 = d.minority_index
    seeds = idx1[np.asarray(local_seeds, dtype=np.intp)]
    return OversampleResult(
        Z=np.asarray(Z, dtype=float).reshape(len(seeds), d.p),
        cat=d.cat[seeds],
        seeds=seeds,
        excluded=idx1[np.asarray(excluded_local, dtype=np.intp)],
        method=method,
        **kw,
    )


def rob_rose(d, cfg=OversampleConfig(), rng=None):
    """robROSE oversampling of the minority class of ``d``.

    Falls back to :func:`rose` (with a warning) when the minority class has
    fewer than 2(p+1) rows, where the robust fit is undefined.
    """
    rng = _rng(cfg, rng)
    idx1 = d.minority_index
    X1 = d.X[idx1]
    n1, p = X1.shape
    if n1 < 2 * (p + 1):
        warnings.warn(
            f"minority class has {n1} rows < 2(p+1) = {2 * (p + 1)}; "
            "robROSE falls back to ROSE without outlier exclusion",
            OversampleWarning,
            stacklevel=2,
        )
        res = rose(d, cfg, rng)
        return OversampleResult(res.Z, res.cat, res.seeds, res.excluded, "robrose",
                                kernel_cov=res.kernel_cov, fallback=True)

    fit = mcd.fast_mcd(X1, n_starts=cfg.mcd_starts, rng=rng.fork("mcd"), reweight=cfg.reweight)
    inliers, excluded = flag_outliers(X1, fit, cfg.cutoff_prob)
    H = cfg.h * smoothing_constant(p, _smoothing_n(d, cfg))
    kernel_cov = H * H * fit.scatter
    L = H * fit.chol  # chol(H^2 S) = H chol(S)

    n_syn = cfg.n_synthetic(n1)
    local = inliers[rng.fork("seeds").integers(0, inliers.size, n_syn)]
    Z = mvn_sample(X1[local], L, rng.fork("kernel"), size=n_syn)
    return _result(d, "robrose", local, Z, excluded, fit=fit, kernel_cov=kernel_cov,
                   info={"H": H, "n_inliers": int(inliers.size)})


def rose(d, cfg=OversampleConfig(), rng=None):
    """ROSE: diagonal normal kernel around uniformly chosen minority rows."""
    rng = _rng(cfg, rng)
    X1 = d.X[d.minority_index]
    n1, p = X1.shape
    if n1 == 0:
        raise EmptyInlierSet("no minority rows to oversample")
    n_syn = cfg.n_synthetic(n1)
    H = cfg.h * smoothing_constant(p, _smoothing_n(d, cfg))
    if n1 == 1:
        warnings.warn("single minority row: ROSE kernel degenerates to duplication",
                      OversampleWarning, stacklevel=2)
        sd = np.zeros(p)
    else:
        sd = X1.std(axis=0, ddof=1)
        if np.any(sd == 0):
            j = int(np.flatnonzero(sd == 0)[0])
            raise ZeroVarianceColumn(f"minority column {d.feature_names[j]!r} is constant")
    bw = H * sd
    local = rng.fork("seeds").integers(0, n1, n_syn)
    Z = mvn_sample(X1[local], np.diag(bw), rng.fork("kernel"), size=n_syn)
    return _result(d, "rose", local, Z, kernel_cov=np.diag(bw ** 2), info={"H": H})


def nearest_neighbours(X, k):
    """k nearest other rows of each row (Euclidean, ties to lower index)."""
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(D, np.inf)
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def smote(d, cfg=OversampleConfig(), rng=None):
    """SMOTE: points on segments between minority rows and their neighbours.

    Neighbours are found after dividing each column by its standard
    deviation over the whole training set; interpolation happens in the
    original units.
    """
    rng = _rng(cfg, rng)
    X1 = d.X[d.minority_index]
    n1 = X1.shape[0]
    n_syn = cfg.n_synthetic(n1)
    if n1 == 0:
        raise EmptyInlierSet("no minority rows to oversample")
    if n1 == 1:
        warnings.warn("single minority row: SMOTE degenerates to duplication",
                      OversampleWarning, stacklevel=2)
        local = np.zeros(n_syn, dtype=np.intp)
        return _result(d, "smote", local, X1[local])
    k = min(cfg.k, n1 - 1)
    sd = d.X.std(axis=0, ddof=1) if d.n > 1 else np.ones(d.p)
    sd[~(sd > 0)] = 1.0
    nbrs = nearest_neighbours(X1 / sd, k)
    local = rng.fork("seeds").integers(0, n1, n_syn)
    partner = nbrs[local, rng.fork("neighbour").integers(0, k, n_syn)]
    alpha = rng.fork("alpha").uniform(0.0, 1.0, n_syn)
    x, y = X1[local], X1[partner]
    Z = x + alpha[:, None] * (y - x)
    return _result(d, "smote", local, Z, info={"k": k, "partners": d.minority_index[partner]})


_DISPATCH = {"smote": smote, "rose": rose, "robrose": rob_rose}


def oversample(d, method, cfg=OversampleConfig(), rng=None):
    try:
        fn = _DISPATCH[method]
    except KeyError:
        raise InvalidConfig(f"unknown method {method!r}; choose from {METHODS}") from None
    return fn(d, cfg, rng)


def rebalance(d, method, cfg=OversampleConfig(), rng=None, return_result=False):
    """Append synthetic minority rows to ``d``.

    Original rows come first in their original order; appended rows carry
    label 1 and ``synthetic = True``.  ``method="none"`` returns ``d``
    unchanged.
    """
    d.check_training()
    if method == "none":
        out = d if d.synthetic is not None else _mark(d, np.zeros(d.n, bool))
        return (out, None) if return_result else out
    res = oversample(d, method, cfg, rng)
    base = _mark(d, np.zeros(d.n, bool) if d.synthetic is None else d.synthetic)
    if res.Z.shape[0] == 0:
        return (base, res) if return_result else base
    extra = Dataset(
        X=res.Z,
        y=np.ones(res.Z.shape[0], dtype=np.int8),
        feature_names=d.feature_names,
        cat=res.cat,
        cat_names=d.cat_names,
        cat_levels=d.cat_levels,
        label_name=d.label_name,
        synthetic=np.ones(res.Z.shape[0], dtype=bool),
    )
    out = concat(base, extra)
    return (out, res) if return_result else out


def _mark(d, flags):
    from dataclasses import replace

    return replace(d, synthetic=flags)
