"""Ternary datasets: CSV I/O, variance-based feature selection, constant imputation.

Throughout the package a ternary matrix is a float array whose cells are
``1.0`` (True), ``0.0`` (False) or ``nan`` (Unknown).  Soft (imputed or
expected) cells are floats in ``[0, 1]``.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DataError

PRIOR_CLAMP = (0.01, 0.99)
LABEL_COLUMN = "label"
ID_COLUMN = "id"

_TOKEN_TO_VALUE = {"1": 1.0, "0": 0.0, "?": np.nan}


class TernaryValue(enum.Enum):
    TRUE = "1"
    FALSE = "0"
    UNKNOWN = "?"

    @property
    def token(self) -> str:
        return self.value

    def as_float(self) -> float:
        return _TOKEN_TO_VALUE[self.value]

    @classmethod
    def from_float(cls, v: float) -> "TernaryValue":
        if np.isnan(v):
            return cls.UNKNOWN
        return cls.TRUE if v == 1.0 else cls.FALSE


def to_token(v: float) -> str:
    if np.isnan(v):
        return "?"
    if v == 1.0:
        return "1"
    if v == 0.0:
        return "0"
    raise ValueError(f"not a ternary value: {v!r}")


def as_ternary_array(values, ndim: int | None = None) -> np.ndarray:
    """Coerce ``values`` to a float ternary array, validating its cells.

    Accepts floats/ints (``nan`` or ``None`` meaning Unknown),
    :class:`TernaryValue` members and the tokens ``"1"``, ``"0"``, ``"?"``.
    """
    arr = np.asarray(values, dtype=object)
    flat = [_coerce_cell(v) for v in arr.ravel()]
    out = np.array(flat, dtype=float).reshape(arr.shape)
    if ndim is not None and out.ndim != ndim:
        raise DataError(f"expected a {ndim}-d ternary array, got shape {out.shape}")
    return out


def _coerce_cell(v) -> float:
    if v is None:
        return np.nan
    if isinstance(v, TernaryValue):
        return v.as_float()
    if isinstance(v, str):
        try:
            return _TOKEN_TO_VALUE[v]
        except KeyError:
            raise DataError(f"invalid ternary token {v!r}") from None
    f = float(v)
    if not (np.isnan(f) or f == 0.0 or f == 1.0):
        raise DataError(f"invalid ternary value {v!r}")
    return f


def known_frequency(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column frequency of True among known cells, and known-cell counts.

    Columns with no known cell get frequency ``nan``.
    """
    X = np.asarray(X, dtype=float)
    known = ~np.isnan(X)
    n_known = known.sum(axis=0)
    n_true = np.where(known, X, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        freq = np.where(n_known > 0, n_true / np.maximum(n_known, 1), np.nan)
    return freq, n_known


@dataclass(frozen=True)
class FeatureInfo:
    name: str
    prior: float = 0.5
    known_variance: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.prior < 1.0:
            raise DataError(f"feature {self.name!r}: prior must lie in (0, 1), got {self.prior}")
        if not 0.0 <= self.known_variance <= 0.25 + 1e-12:
            raise DataError(f"feature {self.name!r}: known_variance out of [0, 0.25]")


def infer_feature_info(names: Sequence[str], X: np.ndarray) -> tuple[FeatureInfo, ...]:
    freq, _ = known_frequency(X)
    infos = []
    for name, p in zip(names, freq):
        if np.isnan(p):
            infos.append(FeatureInfo(name, 0.5, 0.0))
        else:
            prior = float(np.clip(p, *PRIOR_CLAMP))
            infos.append(FeatureInfo(name, prior, float(p * (1.0 - p))))
    return tuple(infos)


@dataclass(frozen=True, eq=False)
class Dataset:
    """An N x D ternary matrix with optional ternary labels.

    ``has_ids`` and ``label_position`` only record the CSV layout so that
    :func:`dump_csv` reproduces the file that was loaded.
    """

    features: tuple[FeatureInfo, ...]
    X: np.ndarray
    y: np.ndarray | None = None
    row_ids: tuple[str, ...] = ()
    has_ids: bool = field(default=False, compare=False)
    label_position: int | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            X = X.reshape(-1, len(self.features))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "features", tuple(self.features))
        n, d = X.shape
        if d != len(self.features):
            raise DataError(f"X has {d} columns but {len(self.features)} features")
        bad = ~np.isnan(X) & (X != 0.0) & (X != 1.0)
        if bad.any():
            raise DataError("X cells must be 0, 1 or nan")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if self.y is not None:
            y = np.asarray(self.y, dtype=float).ravel()
            if y.shape[0] != n:
                raise DataError(f"y has {y.shape[0]} entries for {n} rows")
            if (~np.isnan(y) & (y != 0.0) & (y != 1.0)).any():
                raise DataError("labels must be 0, 1 or nan")
            object.__setattr__(self, "y", y)
        ids = tuple(self.row_ids) if self.row_ids else tuple(str(i) for i in range(n))
        if len(ids) != n:
            raise DataError(f"{len(ids)} row ids for {n} rows")
        if len(set(ids)) != n:
            raise DataError("row ids must be unique")
        object.__setattr__(self, "row_ids", ids)
        if self.label_position is None and self.y is not None:
            object.__setattr__(self, "label_position", d)

    @classmethod
    def from_arrays(cls, X, y=None, feature_names=None, row_ids=None) -> "Dataset":
        X = as_ternary_array(X)
        if X.ndim == 1:
            X = X.reshape(1, -1) if X.size else X.reshape(0, 0)
        names = list(feature_names) if feature_names is not None else [f"f{i + 1}" for i in range(X.shape[1])]
        yy = None if y is None else as_ternary_array(y, ndim=1)
        return cls(
            infer_feature_info(names, X),
            X,
            yy,
            tuple(row_ids) if row_ids is not None else (),
            has_ids=row_ids is not None,
        )

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def priors(self) -> np.ndarray:
        return np.array([f.prior for f in self.features], dtype=float)

    def with_priors(self, priors) -> "Dataset":
        priors = np.broadcast_to(np.asarray(priors, dtype=float), (self.n_features,))
        feats = tuple(replace(f, prior=float(p)) for f, p in zip(self.features, priors))
        return replace(self, features=feats)

    def select_rows(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return replace(
            self,
            X=self.X[idx],
            y=None if self.y is None else self.y[idx],
            row_ids=tuple(self.row_ids[i] for i in idx),
        )

    def select_features(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        label_position = None
        if self.y is not None:
            # label keeps its place relative to the surviving columns
            label_position = int(np.sum(idx < self.label_position))
        return replace(
            self,
            features=tuple(self.features[i] for i in idx),
            X=self.X[:, idx],
            label_position=label_position,
        )

    def with_labels(self, y) -> "Dataset":
        return replace(self, y=None if y is None else as_ternary_array(y, ndim=1), label_position=None)


@dataclass(frozen=True, eq=False)
class SoftMatrix:
    """Completed data: values in [0, 1] plus a per-cell observed flag."""

    values: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        observed = np.asarray(self.observed, dtype=bool)
        if values.shape != observed.shape:
            raise DataError("values and observed mask must share a shape")
        if np.isnan(values).any() or (values < 0).any() or (values > 1).any():
            raise DataError("soft values must lie in [0, 1]")
        obs = values[observed]
        if ((obs != 0.0) & (obs != 1.0)).any():
            raise DataError("observed cells must be exactly 0 or 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "observed", observed)

    @property
    def imputed(self) -> np.ndarray:
        return ~self.observed

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


# --------------------------------------------------------------------- CSV

def load_csv(source: IO[bytes] | IO[str] | bytes | str) -> Dataset:
    """Read a ternary CSV (tokens ``1``, ``0``, ``?``) into a :class:`Dataset`.

    An optional leading ``id`` column holds row identifiers and an optional
    column named ``label`` holds the target.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("line 1: missing header") from None
    if len(set(header)) != len(header):
        dup = next(h for h in header if header.count(h) > 1)
        raise DataError(f"line 1: duplicate header {dup!r}")
    has_ids = bool(header) and header[0] == ID_COLUMN
    if ID_COLUMN in header[1:]:
        raise DataError(f"line 1: column {ID_COLUMN!r} must come first")
    value_cols = header[1:] if has_ids else header
    label_position = value_cols.index(LABEL_COLUMN) if LABEL_COLUMN in value_cols else None
    feature_names = [c for c in value_cols if c != LABEL_COLUMN]

    rows, labels, ids = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} cells, found {len(row)}")
        if has_ids:
            ids.append(row[0])
            row = row[1:]
        vals = []
        for j, tok in enumerate(row):
            col = j + (2 if has_ids else 1)
            if tok not in _TOKEN_TO_VALUE:
                raise DataError(f"line {lineno}, column {col}: invalid cell {tok!r}")
            vals.append(_TOKEN_TO_VALUE[tok])
        if label_position is not None:
            labels.append(vals.pop(label_position))
        rows.append(vals)

    X = np.array(rows, dtype=float).reshape(len(rows), len(feature_names))
    y = np.array(labels, dtype=float) if label_position is not None else None
    return Dataset(
        infer_feature_info(feature_names, X),
        X,
        y,
        tuple(ids),
        has_ids=has_ids,
        label_position=label_position,
    )


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def dump_csv(ds: Dataset, extra_columns: dict[str, Iterable[str]] | None = None) -> str:
    """Serialize ``ds`` back to CSV text, reproducing the loaded layout.

    ``extra_columns`` are appended after the data columns (used by
    ``predict`` to add posterior/decision columns).
    """
    cols = list(ds.feature_names)
    if ds.y is not None:
        cols.insert(ds.label_position, LABEL_COLUMN)
    header = ([ID_COLUMN] if ds.has_ids else []) + cols
    extras = {k: list(v) for k, v in (extra_columns or {}).items()}
    header += list(extras)

    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for t in range(ds.n_rows):
        cells = [to_token(v) for v in ds.X[t]]
        if ds.y is not None:
            cells.insert(ds.label_position, to_token(ds.y[t]))
        if ds.has_ids:
            cells.insert(0, ds.row_ids[t])
        cells += [extras[k][t] for k in extras]
        writer.writerow(cells)
    return buf.getvalue()


# ------------------------------------------------------ selection / imputation

def variance_select(ds: Dataset, cutoff: float) -> Dataset:
    """Keep the columns whose known-cell variance p(1-p) exceeds ``cutoff``."""
    if not 0.0 <= cutoff <= 0.25:
        raise DataError(f"cutoff must lie in [0, 0.25], got {cutoff}")
    freq, _ = known_frequency(ds.X)
    var = freq * (1.0 - freq)
    keep = np.flatnonzero(~np.isnan(var) & (var > cutoff))
    return ds.select_features(keep)


def impute_constant(ds: Dataset, priors=None) -> SoftMatrix:
    """Replace Unknown cells with a per-feature constant.

    ``priors`` overrides the dataset's stored priors: a scalar (e.g. ``0.5``
    for an uninformative fill) or one value per feature.
    """
    fill = ds.priors if priors is None else np.broadcast_to(np.asarray(priors, dtype=float), (ds.n_features,))
    if ((fill <= 0) | (fill >= 1)).any():
        raise DataError("imputation constants must lie in (0, 1)")
    return fill_unknown(ds.X, fill)


def fill_unknown(X: np.ndarray, fill) -> SoftMatrix:
    X = np.asarray(X, dtype=float)
    unknown = np.isnan(X)
    values = np.where(unknown, np.broadcast_to(fill, X.shape), X)
    return SoftMatrix(values, ~unknown)


# ------------------------------------------------------ sklearn transformers

class VarianceSelector(TransformerMixin, BaseEstimator):
    """Drop columns whose variance over known cells is at most ``cutoff``.

    Works on float arrays with ``nan`` for Unknown, unlike
    :class:`sklearn.feature_selection.VarianceThreshold`.
    """

    def __init__(self, cutoff=0.0):
        self.cutoff = cutoff

    def fit(self, X, y=None):
        X = as_ternary_array(X, ndim=2)
        if not 0.0 <= self.cutoff <= 0.25:
            raise DataError(f"cutoff must lie in [0, 0.25], got {self.cutoff}")
        freq, _ = known_frequency(X)
        self.variances_ = freq * (1.0 - freq)
        self.support_ = ~np.isnan(self.variances_) & (self.variances_ > self.cutoff)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "support_")
        X = np.asarray(X, dtype=float)
        return X[:, self.support_]

    def get_support(self, indices=False):
        check_is_fitted(self, "support_")
        return np.flatnonzero(self.support_) if indices else self.support_.copy()


class ConstantImputer(TransformerMixin, BaseEstimator):
    """Fill Unknown cells with a per-feature prior.

    strategy : {"frequency", "uninformative"} or float
        ``"frequency"`` uses the clamped frequency of True among known cells,
        ``"uninformative"`` uses 0.5, a float is used for every feature.
    """

    def __init__(self, strategy="frequency"):
        self.strategy = strategy

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if self.strategy == "frequency":
            freq, _ = known_frequency(X)
            self.fill_ = np.clip(np.where(np.isnan(freq), 0.5, freq), *PRIOR_CLAMP)
        elif self.strategy == "uninformative":
            self.fill_ = np.full(X.shape[1], 0.5)
        else:
            value = float(self.strategy)
            if not 0.0 < value < 1.0:
                raise DataError("constant fill must lie in (0, 1)")
            self.fill_ = np.full(X.shape[1], value)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "fill_")
        return fill_unknown(X, self.fill_).values
