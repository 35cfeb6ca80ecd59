"""Simulation settings and the repeated train/test benchmark protocol.

Two Gaussian classes: majority N(0, I), minority N(1/3 * 1, S1) with S1
tridiagonal (1 on the diagonal, 0.5 next to it).  Setting 2 additionally
replaces 10% of the minority training rows by draws around
``(-10, -2, ..., -2)``.  Each repetition generates data, splits it 70/30
stratified by class, optionally contaminates the training part, oversamples
it with each method, fits logistic regression and scores the untouched test
part by AUC and AUPRC.
"""
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import classify, metrics, resample
from .dataio import Dataset, atomic_write_text
from .errors import BenchmarkFailure, InvalidDimension, NumericalError, TooFewRows
from .numkit import RngStream, cholesky, mvn_sample

ALL_METHODS = ("imbalanced", "smote", "rose", "robrose")
METHOD_LABELS = {"imbalanced": "imbalanced", "smote": "SMOTE", "rose": "ROSE", "robrose": "robROSE"}
METRICS = ("auc", "auprc")
MAX_FAILED_FRACTION = 0.05


def round_half_up(x):
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SimSpec:
    """One cell of the simulation grid."""

    p: int = 10
    n1: int = 100
    n0: int = 900
    contamination: float = 0.0
    mu_out: tuple = None
    repetitions: int = 100
    split: float = 0.7
    seed: int = 0
    setting: int = 1

    @property
    def imbalance_ratio(self):
        return self.n1 / (self.n0 + self.n1)

    @property
    def outlier_center(self):
        if self.mu_out is not None:
            return np.asarray(self.mu_out, dtype=float)
        return np.concatenate([[-10.0], np.full(self.p - 1, -2.0)])


def setting_spec(setting, n0=900, p=10, repetitions=100, seed=0, n1=100):
    """SimSpec for setting 1 (clean) or setting 2 (10% minority outliers)."""
    if setting not in (1, 2):
        raise InvalidDimension(f"setting must be 1 or 2, got {setting}")
    eps = 0.0 if setting == 1 else 0.1
    return SimSpec(p=p, n1=n1, n0=n0, contamination=eps, repetitions=repetitions,
                   seed=seed, setting=setting)


def minority_covariance(p):
    """Tridiagonal matrix with 1 on the diagonal and 0.5 on the first off-diagonals."""
    S = np.eye(p)
    i = np.arange(p - 1)
    S[i, i + 1] = S[i + 1, i] = 0.5
    return S


def gen_setting(spec, rng):
    """Majority rows first (label 0), then minority rows (label 1)."""
    p = spec.p
    if p < 2:
        raise InvalidDimension(f"p must be >= 2, got {p}")
    X0 = mvn_sample(np.zeros(p), np.eye(p), rng.fork("majority"), size=spec.n0)
    L1 = cholesky(minority_covariance(p))
    X1 = mvn_sample(np.full(p, 1.0 / 3.0), L1, rng.fork("minority"), size=spec.n1)
    return Dataset(
        X=np.vstack([X0, X1]),
        y=np.concatenate([np.zeros(spec.n0, np.int8), np.ones(spec.n1, np.int8)]),
    )


def contaminate(train, spec, rng):
    """Replace round(eps * n1_train) random minority rows by outlier draws.

    Returns the new dataset; the replaced row indices are available through
    :func:`contaminate_rows`.
    """
    return contaminate_rows(train, spec, rng)[0]


def contaminate_rows(train, spec, rng):
    idx1 = train.minority_index
    k = round_half_up(spec.contamination * idx1.size)
    if k == 0:
        return train, np.empty(0, dtype=np.intp)
    rows = np.sort(rng.fork("rows").choice(idx1, size=k, replace=False))
    X = np.array(train.X)
    L1 = cholesky(minority_covariance(train.p))
    X[rows] = mvn_sample(spec.outlier_center, L1, rng.fork("draws"), size=k)
    return train.with_X(X), rows


def stratified_split(d, train_fraction, rng):
    """Per-class random split with round(fraction * class count) training rows.

    Both partitions keep the original row order.
    """
    train_parts, test_parts = [], []
    for c in (0, 1):
        idx = np.flatnonzero(d.y == c)
        if idx.size == 0:
            raise TooFewRows(f"class {c} is empty")
        n_tr = round_half_up(train_fraction * idx.size)
        if n_tr == 0 or n_tr == idx.size:
            raise TooFewRows(
                f"class {c}: {idx.size} rows at fraction {train_fraction} leaves an empty partition"
            )
        perm = rng.fork("class", c).permutation(idx.size)
        train_parts.append(idx[perm[:n_tr]])
        test_parts.append(idx[perm[n_tr:]])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts))
    return d.take(train_idx), d.take(test_idx)


# -- repetitions ---------------------------------------------------------------


def evaluate_method(train, test, method, cfg, rng):
    """Oversample ``train`` (unless imbalanced), fit, score ``test``."""
    fitted = train if method == "imbalanced" else resample.rebalance(train, method, cfg, rng)
    model = classify.fit_logit(fitted.X, fitted.y)
    if model.separation:
        raise NumericalError(f"{method}: logistic regression hit separation")
    scores = classify.predict_proba(model, test.X)
    return {
        "auc": metrics.roc_auc(scores, test.y).area,
        "auprc": metrics.pr_auprc(scores, test.y).area,
    }


def run_repetition(spec, methods, cfg, rep, seed):
    """One repetition of one grid cell; returns {method: {metric: value}}."""
    import warnings

    rng = RngStream(seed, rep).fork("setting", spec.setting, "n0", spec.n0, "p", spec.p)
    data = gen_setting(spec, rng.fork("generate"))
    train, test = stratified_split(data, spec.split, rng.fork("split"))
    train = contaminate(train, spec, rng.fork("contaminate"))
    test_before = test.X.copy()
    out = {}
    for method in methods:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out[method] = evaluate_method(train, test, method, cfg, rng.fork("method", method))
        except NumericalError as exc:
            out[method] = {"error": f"{exc.category}: {exc}"}
    if not np.array_equal(test_before, test.X):  # pragma: no cover - frozen arrays
        raise AssertionError("test partition was modified")
    return out


@dataclass
class BenchRow:
    setting: int
    n0: int
    p: int
    method: str
    metric: str
    mean: float
    se: float
    n_excluded: int
    n_used: int


@dataclass
class BenchReport:
    rows: list
    values: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    CSV_COLUMNS = ("setting", "n0", "method", "metric", "mean", "se", "n_excluded")

    def get(self, setting, n0, method, metric, p=None):
        for r in self.rows:
            if (r.setting, r.n0, r.method, r.metric) == (setting, n0, method, metric) and (
                p is None or r.p == p
            ):
                return r
        raise KeyError((setting, n0, method, metric, p))

    def per_rep(self, setting, n0, method, metric, p):
        return self.values[(setting, n0, p, method, metric)]

    def to_csv(self):
        lines = [",".join(self.CSV_COLUMNS)]
        for r in self.rows:
            lines.append(
                f"{r.setting},{r.n0},{r.method},{r.metric},{r.mean:.6f},{r.se:.6f},{r.n_excluded}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        atomic_write_text(path, self.to_csv())

    def to_table(self):
        """Plain-text tables, one per setting, dimension and metric."""
        out = []
        methods = [m for m in ALL_METHODS if any(r.method == m for r in self.rows)]
        cells = sorted({(r.setting, r.p) for r in self.rows})
        for setting, p in cells:
            for metric in METRICS:
                rows = [r for r in self.rows
                        if r.setting == setting and r.p == p and r.metric == metric]
                if not rows:
                    continue
                reps = max(r.n_used + r.n_excluded for r in rows)
                out.append(
                    f"Simulation setting {setting}: average {metric.upper()} (and standard error) "
                    f"for logistic regression models [p={p}, {reps} repetitions]"
                )
                head = f"{'n0':>6} {'ratio':>6}" + "".join(
                    f" {METHOD_LABELS[m]:>10} {'':>7}" for m in methods
                )
                out.append(head)
                out.append("-" * len(head))
                for n0 in sorted({r.n0 for r in rows}):
                    n1 = self.meta.get("n1", 100)
                    line = f"{n0:>6} {100.0 * n1 / (n0 + n1):>5.1f}%"
                    for m in methods:
                        r = next(x for x in rows if x.n0 == n0 and x.method == m)
                        se = f"({r.se:.3f})".replace("0.", ".")
                        line += f" {r.mean:>10.3f} {se:>7}"
                    out.append(line)
                out.append("")
        return "\n".join(out)


def _worker(args):
    return run_repetition(*args)


def default_workers():
    cap = os.environ.get("SKEWGUARD_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def run_benchmark(specs, methods=ALL_METHODS, cfg=None, seed=0, workers=1,
                  max_failed_fraction=MAX_FAILED_FRACTION):
    """Run every repetition of every grid cell and aggregate AUC/AUPRC.

    Results are identical for any ``workers`` value: each repetition owns a
    stream keyed by ``(seed, repetition)`` and the grid cell, and aggregation
    walks repetitions in index order.
    """
    if isinstance(specs, SimSpec):
        specs = [specs]
    cfg = cfg if cfg is not None else resample.OversampleConfig()
    methods = tuple(methods)
    jobs = [(s, methods, cfg, rep, seed) for s in specs for rep in range(s.repetitions)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_worker(j) for j in jobs]

    rows, values, errors = [], {}, []
    pos = 0
    for s in specs:
        reps = results[pos:pos + s.repetitions]
        pos += s.repetitions
        for m in methods:
            failed = [i for i, r in enumerate(reps) if "error" in r[m]]
            errors += [(s.setting, s.n0, s.p, m, i, reps[i][m]["error"]) for i in failed]
            if len(failed) > max_failed_fraction * s.repetitions:
                raise BenchmarkFailure(
                    f"setting {s.setting}, n0={s.n0}, {m}: {len(failed)} of "
                    f"{s.repetitions} repetitions failed"
                )
            for metric in METRICS:
                v = np.array([r[m].get(metric, np.nan) for r in reps])
                used = v[~np.isnan(v)]
                mean = float(np.mean(used)) if used.size else float("nan")
                se = float(np.std(used, ddof=1) / np.sqrt(used.size)) if used.size > 1 else float("nan")
                values[(s.setting, s.n0, s.p, m, metric)] = v
                rows.append(BenchRow(s.setting, s.n0, s.p, m, metric, mean, se,
                                     len(failed), int(used.size)))
    meta = {
        "seed": seed,
        "n1": specs[0].n1 if specs else None,
        "methods": methods,
        "cells": [
            {"setting": s.setting, "n0": s.n0, "p": s.p, "repetitions": s.repetitions,
             "imbalance_ratio": s.imbalance_ratio}
            for s in specs
        ],
        "errors": errors,
    }
    return BenchReport(rows=rows, values=values, meta=meta)
