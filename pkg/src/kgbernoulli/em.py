"""EM fitting of the naive Bayes model when inputs or labels are missing.

Phase 1 handles Unknown input cells of labelled rows; phase 2 handles
Unknown labels over a completed (soft) input matrix.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._bernoulli import logsumexp, normalize_log
from .dataset import Dataset, SoftMatrix, as_ternary_array
from .exceptions import DataError
from .mbnb import (
    Decision,
    MbnbParams,
    _check_X,
    class_log_joint,
    complete_expected,
    decide,
    fit_mle,
    fit_weighted,
    one_hot,
    posterior,
)


@dataclass(frozen=True)
class EmConfig:
    """Stopping rule and smoothing shared by every EM procedure.

    Iteration stops once ``|L_new - L_old| / (|L_old| + 1e-12) < tol`` or after
    ``max_iter`` iterations.  ``alpha`` > 0 turns the M-step into a MAP update
    under a symmetric Beta prior; the traced objective then includes the log
    prior so that it stays monotone.
    """

    tol: float = 1e-6
    max_iter: int = 200
    seed: int = 42
    alpha: float = 0.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


@dataclass
class EmTrace:
    loglik_per_iter: list[float] = field(default_factory=list)
    initial_loglik: float = float("nan")
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.loglik_per_iter)

    def is_monotone(self, slack: float = 1e-9) -> bool:
        seq = [self.initial_loglik, *self.loglik_per_iter]
        return all(b >= a - slack for a, b in zip(seq, seq[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "loglik"])
        w.writerow([0, repr(self.initial_loglik)])
        for i, ll in enumerate(self.loglik_per_iter, start=1):
            w.writerow([i, repr(ll)])
        return buf.getvalue()


def _relative_change(new: float, old: float) -> float:
    return abs(new - old) / (abs(old) + 1e-12)


def log_prior(m: MbnbParams, alpha: float) -> float:
    """Unnormalised log Beta(alpha+1, alpha+1) density over pi and every p."""
    if alpha == 0:
        return 0.0
    p = np.concatenate([m.p1, m.p0, [m.pi]])
    return float(alpha * np.sum(np.log(p) + np.log1p(-p)))


def phase1_objective(m: MbnbParams, X: np.ndarray, y: np.ndarray, alpha: float = 0.0) -> float:
    a = class_log_joint(m, X)
    return float(np.sum(np.where(y == 1.0, a[:, 1], a[:, 0]))) + log_prior(m, alpha)


def phase2_objective(m: MbnbParams, X: np.ndarray, y: np.ndarray, alpha: float = 0.0) -> float:
    """Observed-data log-likelihood: labelled rows use their class term,
    unlabelled rows the log of the class-marginal."""
    a = class_log_joint(m, X)
    known = ~np.isnan(y)
    ll = np.where(y == 1.0, a[:, 1], a[:, 0])[known].sum() + logsumexp(a[~known], axis=1).sum()
    return float(ll) + log_prior(m, alpha)


def _check_init(init: MbnbParams, X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[1] != init.n_features:
        raise DataError(f"init has {init.n_features} features, data has shape {X.shape}")


def _phase1_estep(m: MbnbParams, X: np.ndarray, y: np.ndarray) -> SoftMatrix:
    # with the label known, E[x_u | x_o, y=b] = p_bu by conditional independence
    unknown = np.isnan(X)
    class_mean = np.where((y == 1.0)[:, None], m.p1, m.p0)
    return SoftMatrix(np.where(unknown, class_mean, X), ~unknown)


def em_phase1(ds, init: MbnbParams, cfg: EmConfig = EmConfig(), y=None):
    """EM over Unknown input cells of fully labelled data.

    Returns ``(params, completed SoftMatrix, EmTrace)``.
    """
    if isinstance(ds, Dataset):
        X, y = ds.X, ds.y if y is None else y
    else:
        X = np.asarray(ds, dtype=float)
    if y is None:
        raise DataError("em_phase1 needs labels")
    y = np.asarray(y, dtype=float)
    if np.isnan(y).any():
        raise DataError("em_phase1 needs every label to be known")
    _check_init(init, X)
    names = init.feature_names
    R = one_hot(y)
    has_latent = bool(np.isnan(X).any())

    m = init
    trace = EmTrace(initial_loglik=phase1_objective(m, X, y, cfg.alpha))
    prev = trace.initial_loglik
    for _ in range(cfg.max_iter):
        soft = _phase1_estep(m, X, y)
        m = fit_weighted(soft.values, R, cfg.alpha, names)
        ll = phase1_objective(m, X, y, cfg.alpha)
        trace.loglik_per_iter.append(ll)
        if not has_latent or _relative_change(ll, prev) < cfg.tol:
            trace.converged = True
            break
        prev = ll
    return m, _phase1_estep(m, X, y), trace


def em_phase2(X, y, init: MbnbParams, cfg: EmConfig = EmConfig()):
    """EM over Unknown labels given completed inputs.

    Returns ``(params, soft labels r_t1, EmTrace)``.  Rows with a known label
    keep their indicator as responsibility.
    """
    X = X.values if isinstance(X, SoftMatrix) else np.asarray(X, dtype=float)
    if np.isnan(X).any():
        raise DataError("em_phase2 needs a completed input matrix")
    y = as_ternary_array(np.asarray(y, dtype=object), ndim=1)
    if y.shape[0] != X.shape[0]:
        raise DataError(f"{y.shape[0]} labels for {X.shape[0]} rows")
    _check_init(init, X)
    known = ~np.isnan(y)
    fixed = one_hot(y)

    def estep(m):
        R, _ = normalize_log(class_log_joint(m, X))
        return np.where(known[:, None], fixed, R)

    m = init
    trace = EmTrace(initial_loglik=phase2_objective(m, X, y, cfg.alpha))
    prev = trace.initial_loglik
    for _ in range(cfg.max_iter):
        m = fit_weighted(X, estep(m), cfg.alpha, init.feature_names)
        ll = phase2_objective(m, X, y, cfg.alpha)
        trace.loglik_per_iter.append(ll)
        if known.all() or _relative_change(ll, prev) < cfg.tol:
            trace.converged = True
            break
        prev = ll
    return m, estep(m)[:, 1], trace


class MultivariateBernoulliNBEM(ClassifierMixin, BaseEstimator):
    """Naive Bayes fitted by EM on incomplete inputs and labels.

    Labelled rows go through phase 1 (missing inputs).  When ``phase2`` is set
    and some labels are ``nan``, the unlabelled rows are completed with their
    expected values under the phase-1 model and phase 2 refits on all rows.
    Prediction marginalises Unknown inputs.
    """

    def __init__(self, alpha=1.0, theta=0.5, tol=1e-6, max_iter=200, phase2=True):
        self.alpha = alpha
        self.theta = theta
        self.tol = tol
        self.max_iter = max_iter
        self.phase2 = phase2

    def fit(self, X, y, feature_names=None):
        X = _check_X(X)
        y = as_ternary_array(np.asarray(y, dtype=object), ndim=1)
        cfg = EmConfig(tol=self.tol, max_iter=self.max_iter, alpha=self.alpha)
        labelled = ~np.isnan(y)
        init = fit_mle(X[labelled], y[labelled], self.alpha, feature_names)
        params, soft, self.trace1_ = em_phase1(X[labelled], init, cfg, y=y[labelled])
        self.trace2_ = None
        if self.phase2 and not labelled.all():
            values = np.empty_like(X)
            values[labelled] = soft.values
            values[~labelled] = complete_expected(params, X[~labelled]).values
            params, self.soft_labels_, self.trace2_ = em_phase2(values, y, params, cfg)
        self.params_ = params
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        q = np.atleast_1d(posterior(self.params_, _check_X(X)))
        return np.column_stack([1.0 - q, q])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)

    def decide(self, X) -> list[Decision]:
        return [decide(q, self.theta) for q in self.predict_proba(X)[:, 1]]
