"""Datasets, CSV ingestion/emission and column scaling."""
import csv
import os
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidConfig,
    MinorityLabelError,
    MissingValue,
    NonBinaryLabel,
    OneClassOnly,
    ParseError,
    ZeroScaleColumn,
)

PROVENANCE_COLUMN = "synthetic"
MAD_CONSISTENCY = 1.4826
_MISSING_TOKENS = {"", "na", "nan", "null", "none", "?"}


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Numeric features, optional categorical codes and binary labels.

    ``y == 1`` marks the minority (fraud) class.  ``cat`` holds integer codes
    into ``cat_levels``; ``synthetic`` flags generated rows when known.
    Arrays are copied and made read-only on construction.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple = ()
    cat: np.ndarray = None
    cat_names: tuple = ()
    cat_levels: tuple = ()
    label_name: str = "class"
    synthetic: np.ndarray = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        y = np.asarray(self.y).astype(np.int8).ravel()
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows, y has {y.shape[0]}")
        if y.size and not np.isin(y, (0, 1)).all():
            raise NonBinaryLabel("labels must be 0 or 1")
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DimensionMismatch("feature_names does not match X")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "feature_names", names)
        if self.cat is None:
            cat = np.zeros((X.shape[0], 0), dtype=np.int64)
        else:
            cat = np.asarray(self.cat, dtype=np.int64)
            cat = cat.reshape(X.shape[0], cat.size // X.shape[0] if X.shape[0] else len(self.cat_names))
        if cat.shape[1] != len(self.cat_names) or len(self.cat_names) != len(self.cat_levels):
            raise DimensionMismatch("categorical codes, names and levels disagree")
        object.__setattr__(self, "cat", _frozen(cat))
        object.__setattr__(self, "cat_names", tuple(self.cat_names))
        object.__setattr__(self, "cat_levels", tuple(tuple(lv) for lv in self.cat_levels))
        if self.synthetic is not None:
            syn = np.asarray(self.synthetic, dtype=bool).ravel()
            if syn.shape[0] != X.shape[0]:
                raise DimensionMismatch("synthetic flags do not match row count")
            object.__setattr__(self, "synthetic", _frozen(syn))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def q(self):
        return self.cat.shape[1]

    @property
    def n1(self):
        return int(np.count_nonzero(self.y == 1))

    @property
    def n0(self):
        return int(np.count_nonzero(self.y == 0))

    @property
    def minority_index(self):
        return np.flatnonzero(self.y == 1)

    def take(self, rows):
        rows = np.asarray(rows, dtype=np.intp)
        return replace(
            self,
            X=self.X[rows],
            y=self.y[rows],
            cat=self.cat[rows],
            synthetic=None if self.synthetic is None else self.synthetic[rows],
        )

    def with_X(self, X):
        return replace(self, X=X)

    def decoded_cat(self):
        """Categorical values as an (n, q) object array of level strings."""
        out = np.empty(self.cat.shape, dtype=object)
        for j, levels in enumerate(self.cat_levels):
            lv = np.asarray(levels, dtype=object)
            out[:, j] = lv[self.cat[:, j]] if self.n else []
        return out

    def check_training(self):
        """Raise unless both classes are present and label 1 is the minority."""
        if self.n1 == 0 or self.n0 == 0:
            raise OneClassOnly(f"need both classes, got n1={self.n1}, n0={self.n0}")
        if self.n1 > self.n0:
            raise MinorityLabelError(
                f"label 1 must be the minority class (n1={self.n1} > n0={self.n0})"
            )

    def equals(self, other):
        """Value equality, comparing categorical columns by decoded label."""
        if not isinstance(other, Dataset):
            return False
        if (self.feature_names, self.cat_names, self.label_name) != (
            other.feature_names,
            other.cat_names,
            other.label_name,
        ):
            return False
        if self.X.shape != other.X.shape or not np.array_equal(self.X, other.X):
            return False
        if not np.array_equal(self.y, other.y):
            return False
        if not np.array_equal(self.decoded_cat(), other.decoded_cat()):
            return False
        a = self.synthetic if self.synthetic is not None else np.zeros(self.n, bool)
        b = other.synthetic if other.synthetic is not None else np.zeros(other.n, bool)
        return bool(np.array_equal(a, b))


def concat(a, b):
    """Rows of ``a`` followed by rows of ``b`` (schemas must agree)."""
    if a.feature_names != b.feature_names or a.cat_names != b.cat_names:
        raise DimensionMismatch("datasets have different schemas")
    if a.cat_levels != b.cat_levels:
        raise DimensionMismatch("categorical level tables differ")
    syn = None
    if a.synthetic is not None or b.synthetic is not None:
        sa = a.synthetic if a.synthetic is not None else np.zeros(a.n, bool)
        sb = b.synthetic if b.synthetic is not None else np.zeros(b.n, bool)
        syn = np.concatenate([sa, sb])
    return replace(
        a,
        X=np.vstack([a.X, b.X]),
        y=np.concatenate([a.y, b.y]),
        cat=np.vstack([a.cat, b.cat]),
        synthetic=syn,
    )


# -- CSV ------------------------------------------------------------------------


def _parse_float_column(values, name):
    try:
        col = np.asarray(values, dtype=float)
    except ValueError:
        col = None
    if col is not None and not np.isnan(col).any():
        return col
    for i, v in enumerate(values):
        if v.strip().lower() in _MISSING_TOKENS:
            raise MissingValue("missing value", row=i + 1, column=name)
        try:
            float(v)
        except ValueError:
            raise ParseError(f"cannot parse {v!r} as a number", row=i + 1, column=name) from None
    raise MissingValue("missing value", column=name)  # pragma: no cover


def _encode(values, name):
    levels = {}
    codes = np.empty(len(values), dtype=np.int64)
    for i, v in enumerate(values):
        if v.strip().lower() in _MISSING_TOKENS:
            raise MissingValue("missing value", row=i + 1, column=name)
        codes[i] = levels.setdefault(v, len(levels))
    return codes, tuple(levels)


def read_csv(path, label="class", categorical=(), drop=(), log1p=()):
    """Load a labelled dataset from a comma-separated file with a header row.

    Parameters
    ----------
    path : str or path-like
    label : str
        Name of the 0/1 label column.
    categorical : sequence of str
        Columns to dictionary-encode (codes follow order of first appearance).
    drop : sequence of str
        Columns to ignore entirely (e.g. ``Time`` in the card-fraud file).
    log1p : sequence of str
        Numeric columns replaced by ``log(1 + value)``.

    A column named ``synthetic`` is read back as row provenance rather than
    as a feature.  Row order is preserved.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file, header row required") from None
        rows = []
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(row)}", row=lineno
                )
            rows.append(row)

    if label not in header:
        raise NonBinaryLabel(f"label column {label!r} not found")
    for name in list(categorical) + list(drop) + list(log1p):
        if name not in header:
            raise ParseError(f"unknown column {name!r}")
    columns = list(zip(*rows)) if rows else [() for _ in header]
    by_name = dict(zip(header, columns))

    y_raw = _parse_float_column(list(by_name[label]), label) if rows else np.zeros(0)
    if not np.isin(y_raw, (0.0, 1.0)).all():
        bad = y_raw[~np.isin(y_raw, (0.0, 1.0))][0]
        raise NonBinaryLabel(f"label column {label!r} contains {bad:g}")

    synthetic = None
    if PROVENANCE_COLUMN in header and PROVENANCE_COLUMN != label:
        syn = _parse_float_column(list(by_name[PROVENANCE_COLUMN]), PROVENANCE_COLUMN) if rows else np.zeros(0)
        synthetic = syn.astype(bool)

    skip = {label, PROVENANCE_COLUMN, *drop, *categorical}
    feature_names = [h for h in header if h not in skip]
    n = len(rows)
    X = np.empty((n, len(feature_names)))
    for j, name in enumerate(feature_names):
        col = _parse_float_column(list(by_name[name]), name) if rows else np.zeros(0)
        if name in log1p:
            if (col <= -1).any():
                raise ParseError(f"log1p undefined for values <= -1", column=name)
            col = np.log1p(col)
        X[:, j] = col

    cat_names = [h for h in header if h in set(categorical)]
    cat = np.empty((n, len(cat_names)), dtype=np.int64)
    levels = []
    for j, name in enumerate(cat_names):
        cat[:, j], lv = _encode(list(by_name[name]), name)
        levels.append(lv)

    return Dataset(
        X=X,
        y=y_raw.astype(np.int8),
        feature_names=tuple(feature_names),
        cat=cat,
        cat_names=tuple(cat_names),
        cat_levels=tuple(levels),
        label_name=label,
        synthetic=synthetic,
    )


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(v):
    # repr round-trips exactly
    return repr(float(v))


def write_csv(d, path, provenance=False):
    """Write ``d`` so that :func:`read_csv` recovers an equal dataset.

    Numeric columns come first, then categorical columns (as their original
    string labels), then the label.  With ``provenance=True`` a trailing
    ``synthetic`` column marks generated rows with 1.
    """
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(d.feature_names) + list(d.cat_names) + [d.label_name]
    if provenance:
        header.append(PROVENANCE_COLUMN)
    w.writerow(header)
    decoded = d.decoded_cat()
    syn = d.synthetic if d.synthetic is not None else np.zeros(d.n, dtype=bool)
    for i in range(d.n):
        row = [format_float(v) for v in d.X[i]]
        row += [str(v) for v in decoded[i]]
        row.append(str(int(d.y[i])))
        if provenance:
            row.append(str(int(syn[i])))
        w.writerow(row)
    atomic_write_text(path, buf.getvalue())


# -- scaling ------------------------------------------------------------------

SCALING_MODES = ("none", "standard", "robust")


@dataclass(frozen=True, eq=False)
class ScalingSpec:
    mode: str
    center: np.ndarray = field(default=None)
    scale: np.ndarray = field(default=None)

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.center.shape[0]:
            raise DimensionMismatch(
                f"scaling fitted on {self.center.shape[0]} columns, got {X.shape[-1]}"
            )
        return (X - self.center) / self.scale

    def invert(self, Z):
        Z = np.asarray(Z, dtype=float)
        if Z.shape[-1] != self.center.shape[0]:
            raise DimensionMismatch("column count mismatch")
        return Z * self.scale + self.center


def fit_scaling(d, mode="standard"):
    """Per-column centre/scale for ``mode`` in {none, standard, robust}.

    ``standard`` uses the mean and the sample standard deviation; ``robust``
    uses the median and the MAD times 1.4826.
    """
    X = d.X if isinstance(d, Dataset) else np.asarray(d, dtype=float)
    p = X.shape[1]
    if mode == "none":
        return ScalingSpec("none", np.zeros(p), np.ones(p))
    if mode == "standard":
        center = X.mean(axis=0)
        scale = X.std(axis=0, ddof=1)
    elif mode == "robust":
        center = np.median(X, axis=0)
        scale = MAD_CONSISTENCY * np.median(np.abs(X - center), axis=0)
    else:
        raise InvalidConfig(f"unknown scaling mode {mode!r}")
    bad = ~(np.isfinite(scale) & (scale > 0))
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        name = d.feature_names[j] if isinstance(d, Dataset) else str(j)
        raise ZeroScaleColumn(f"column {name!r} has zero {mode} scale")
    return ScalingSpec(mode, center, scale)


def apply_scaling(d, s):
    if s.mode == "none":
        return d
    return d.with_X(s.apply(d.X))


def invert_scaling(d, s):
    if s.mode == "none":
        return d
    return d.with_X(s.invert(d.X))
