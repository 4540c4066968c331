"""Multivariate Bernoulli naive Bayes with exact marginalisation of Unknown inputs."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._bernoulli import clamp, log_bernoulli, split_known
from .dataset import ConstantImputer, Dataset, SoftMatrix, as_ternary_array
from .exceptions import DataError, FitError

CLASS_NAMES = {0: "negative (y=0)", 1: "positive (y=1)"}


@dataclass(frozen=True, eq=False)
class MbnbParams:
    """Fitted naive Bayes parameters.

    pi : prior P(y=1)
    p1, p0 : per-feature P(x_i = 1 | y = b)
    """

    pi: float
    p1: np.ndarray
    p0: np.ndarray
    feature_names: tuple[str, ...] = ()
    alpha: float = 0.0

    def __post_init__(self):
        p1 = np.asarray(self.p1, dtype=float)
        p0 = np.asarray(self.p0, dtype=float)
        if p1.shape != p0.shape or p1.ndim != 1:
            raise DataError("p1 and p0 must be 1-d vectors of equal length")
        if not 0.0 < self.pi < 1.0:
            raise DataError(f"pi must lie in (0, 1), got {self.pi}")
        if ((p1 <= 0) | (p1 >= 1) | (p0 <= 0) | (p0 >= 1)).any():
            raise DataError("Bernoulli parameters must lie strictly inside (0, 1)")
        names = tuple(self.feature_names) or tuple(f"f{i + 1}" for i in range(p1.size))
        if len(names) != p1.size:
            raise DataError("feature_names length does not match parameters")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "pi", float(self.pi))
        object.__setattr__(self, "feature_names", names)

    @property
    def n_features(self) -> int:
        return self.p1.size

    @property
    def class_params(self) -> np.ndarray:
        """(2, D) matrix with rows p0, p1 (row index = label)."""
        return np.vstack([self.p0, self.p1])

    @property
    def log_priors(self) -> np.ndarray:
        return np.log([1.0 - self.pi, self.pi])

    def complement(self) -> "MbnbParams":
        """The same model with the roles of y=1 and y=0 swapped."""
        return MbnbParams(1.0 - self.pi, self.p0, self.p1, self.feature_names, self.alpha)


class DecisionLabel(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    REJECTED = "rejected"


@dataclass(frozen=True)
class Decision:
    label: DecisionLabel
    posterior: float


# ------------------------------------------------------------------ fitting

def fit_weighted(X, R, alpha: float = 0.0, feature_names=()) -> MbnbParams:
    """MAP/MLE fit from per-row class weights.

    ``R[t, b]`` is the weight of row t for class b (one-hot for known labels,
    responsibilities in EM).  Unknown cells are excluded per column from both
    numerator and denominator; soft cells count fractionally.
    """
    values, known = split_known(X)
    R = np.asarray(R, dtype=float)
    n_b = R.sum(axis=0)
    for b in (1, 0):
        if n_b[b] <= 0:
            raise FitError(f"no training rows for class {CLASS_NAMES[b]}")
    counts = R.T @ values  # (2, D)
    totals = R.T @ known
    denom = totals + 2.0 * alpha
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(denom > 0, (counts + alpha) / denom, 0.5)
    pi = (n_b[1] + alpha) / (n_b.sum() + 2.0 * alpha)
    return MbnbParams(float(clamp(pi)), clamp(p[1]), clamp(p[0]), tuple(feature_names), alpha)


def _xy(X, y):
    if isinstance(X, Dataset):
        if y is None:
            y = X.y
        names = tuple(X.feature_names)
        X = X.X
    elif isinstance(X, SoftMatrix):
        names = ()
        X = X.values
    else:
        names = ()
        X = np.asarray(X, dtype=float)
    if y is None:
        raise FitError("labels are required")
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or y.shape[0] != X.shape[0]:
        raise DataError(f"shape mismatch: X {X.shape}, y {y.shape}")
    return X, y, names


def one_hot(y: np.ndarray) -> np.ndarray:
    """(N, 2) indicator of labels; rows with Unknown label are all-zero."""
    y = np.asarray(y, dtype=float)
    return np.column_stack([y == 0.0, y == 1.0]).astype(float)


def fit_mle(X, y=None, alpha: float = 1.0, feature_names=None) -> MbnbParams:
    """Smoothed maximum-likelihood fit on labelled rows.

    ``X`` may be a :class:`Dataset` (labels taken from it), a
    :class:`SoftMatrix` or a float array with ``nan`` for Unknown.  Rows with
    an Unknown label are ignored.
    """
    if alpha < 0:
        raise FitError("alpha must be non-negative")
    X, y, names = _xy(X, y)
    if feature_names is not None:
        names = tuple(feature_names)
    return fit_weighted(X, one_hot(y), alpha, names)


# ---------------------------------------------------------------- inference

def _check_dim(m: MbnbParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.n_features:
        raise DataError(f"expected {m.n_features} features, got {x.shape[-1]}")
    return x


def class_log_joint(m: MbnbParams, X) -> np.ndarray:
    """``log pi_b + log Ber(x_o | p_b)`` for b = 0, 1; shape (N, 2)."""
    X = np.atleast_2d(_check_dim(m, X))
    return log_bernoulli(X, m.class_params) + m.log_priors


def posterior(m: MbnbParams, x):
    """P(y=1 | observed part of x).  Accepts one vector or a matrix of rows."""
    x = _check_dim(m, x)
    a = class_log_joint(m, x)
    q = expit(a[:, 1] - a[:, 0])
    return float(q[0]) if x.ndim == 1 else q


def classify(m: MbnbParams, x, theta: float = 0.5) -> Decision:
    if not 0.5 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0.5, 1], got {theta}")
    q = posterior(m, x)
    return decide(q, theta)


def decide(q: float, theta: float = 0.5) -> Decision:
    if max(q, 1.0 - q) < theta:
        return Decision(DecisionLabel.REJECTED, q)
    return Decision(DecisionLabel.POSITIVE if q > 0.5 else DecisionLabel.NEGATIVE, q)


def expected_missing(m: MbnbParams, x) -> np.ndarray:
    """E[x_u | x_o] for every Unknown coordinate u of a single vector ``x``."""
    x = _check_dim(m, x)
    if x.ndim != 1:
        raise DataError("expected_missing takes a single vector")
    u = np.isnan(x)
    q = posterior(m, x)
    return q * m.p1[u] + (1.0 - q) * m.p0[u]


def complete_expected(m: MbnbParams, X) -> SoftMatrix:
    """Fill every Unknown cell of ``X`` with its expected value under ``m``."""
    X = np.atleast_2d(_check_dim(m, X))
    q = np.atleast_1d(posterior(m, X))[:, None]
    expected = q * m.p1 + (1.0 - q) * m.p0
    unknown = np.isnan(X)
    return SoftMatrix(np.where(unknown, expected, X), ~unknown)


def log_likelihood(m: MbnbParams, X, y=None) -> float:
    """Complete-label log-likelihood; Unknown inputs are marginalised."""
    X, y, _ = _xy(X, y)
    if np.isnan(y).any():
        raise DataError("log_likelihood needs every label to be known")
    a = class_log_joint(m, X)
    return float(np.sum(np.where(y == 1.0, a[:, 1], a[:, 0])))


# ---------------------------------------------------------------- estimator

def _check_X(X):
    return check_array(X, dtype=float, ensure_all_finite="allow-nan", ensure_min_samples=0)


class MultivariateBernoulliNB(ClassifierMixin, BaseEstimator):
    """Naive Bayes over ternary Boolean features.

    Parameters
    ----------
    alpha : float, default=1.0
        Symmetric pseudo-count added to every Bernoulli and to the prior.
    theta : float, default=0.5
        Confidence required by :meth:`decide`; values above 0.5 enable
        rejection.
    imputation : {"marginalize", "constant", "uninformative"}, default="marginalize"
        How Unknown inputs are handled.  ``"marginalize"`` drops their factors,
        ``"constant"`` fills them with the observed column frequency and
        ``"uninformative"`` with 0.5 before fitting and predicting.

    Rows whose label is ``nan`` are ignored by :meth:`fit`.
    """

    def __init__(self, alpha=1.0, theta=0.5, imputation="marginalize"):
        self.alpha = alpha
        self.theta = theta
        self.imputation = imputation

    def _prepare(self, X):
        if self.imputation == "marginalize":
            return X
        return self.imputer_.transform(X)

    def fit(self, X, y, feature_names=None):
        X = _check_X(X)
        y = as_ternary_array(np.asarray(y, dtype=object), ndim=1)
        if self.imputation not in ("marginalize", "constant", "uninformative"):
            raise ValueError(f"unknown imputation {self.imputation!r}")
        if self.imputation != "marginalize":
            strategy = "frequency" if self.imputation == "constant" else "uninformative"
            self.imputer_ = ConstantImputer(strategy).fit(X)
        labelled = ~np.isnan(y)
        self.params_ = fit_mle(self._prepare(X)[labelled], y[labelled], self.alpha, feature_names)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        q = np.atleast_1d(posterior(self.params_, self._prepare(_check_X(X))))
        return np.column_stack([1.0 - q, q])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)

    def decide(self, X) -> list[Decision]:
        return [decide(q, self.theta) for q in self.predict_proba(X)[:, 1]]
