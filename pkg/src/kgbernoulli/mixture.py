"""Bernoulli mixtures and the two-tier hierarchical Bernoulli classifier."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._bernoulli import clamp, log_bernoulli, logsumexp, normalize_log, split_known
from .dataset import Dataset, SoftMatrix, as_ternary_array
from .em import EmConfig, EmTrace, _relative_change
from .exceptions import DataError, FitError
from .mbnb import MbnbParams, _check_X, decide, fit_mle, posterior


@dataclass(frozen=True, eq=False)
class MixtureParams:
    mu: np.ndarray
    P: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).ravel()
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        if P.shape[0] != mu.size:
            raise DataError(f"{mu.size} weights for {P.shape[0]} components")
        if (mu < 0).any() or abs(mu.sum() - 1.0) > 1e-12:
            raise DataError("mixture weights must form a simplex")
        if ((P <= 0) | (P >= 1)).any():
            raise DataError("component parameters must lie strictly inside (0, 1)")
        names = tuple(self.feature_names) or tuple(f"f{i + 1}" for i in range(P.shape[1]))
        if len(names) != P.shape[1]:
            raise DataError("feature_names length does not match parameters")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_components(self) -> int:
        return self.mu.size

    @property
    def n_features(self) -> int:
        return self.P.shape[1]

    def permuted(self, order) -> "MixtureParams":
        order = np.asarray(order)
        return MixtureParams(self.mu[order], self.P[order], self.feature_names)


def _as_matrix(X) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(X, Dataset):
        return X.X, tuple(X.feature_names)
    if isinstance(X, SoftMatrix):
        return X.values, ()
    X = np.asarray(X, dtype=float)
    return X, ()


def _component_log_joint(m: MixtureParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != m.n_features:
        raise DataError(f"expected {m.n_features} features, got {X.shape[-1]}")
    with np.errstate(divide="ignore"):
        log_mu = np.log(m.mu)
    return log_bernoulli(np.atleast_2d(X), m.P) + log_mu


def responsibilities(m: MixtureParams, x) -> np.ndarray:
    """Posterior over components given the observed part of ``x`` (or of each row)."""
    x = np.asarray(x, dtype=float)
    R, _ = normalize_log(_component_log_joint(m, x))
    return R[0] if x.ndim == 1 else R


def mixture_log_likelihood(m: MixtureParams, X) -> float:
    X, _ = _as_matrix(X)
    return float(logsumexp(_component_log_joint(m, X), axis=1).sum())


def mixture_impute(m: MixtureParams, x):
    """Replace Unknown coordinates with ``sum_k r_k(x_o) p_ku``; observed pass through."""
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    R = np.atleast_2d(responsibilities(m, X))
    filled = np.where(np.isnan(X), R @ m.P, X)
    return filled[0] if x.ndim == 1 else filled


def _mstep(X_values, X_known, R, P_old):
    num = R.T @ X_values
    den = R.T @ X_known
    with np.errstate(invalid="ignore", divide="ignore"):
        P = np.where(den > 0, num / den, P_old)
    mu = R.sum(axis=0) / R.shape[0]
    return mu / mu.sum(), clamp(P)


def run_mixture_em(X, init: MixtureParams, cfg: EmConfig = EmConfig()) -> tuple[MixtureParams, EmTrace]:
    """EM from a given starting point.  Unknown cells are marginalised in the
    E-step and excluded per coordinate in the M-step."""
    X, _ = _as_matrix(X)
    if X.shape[1] != init.n_features:
        raise DataError(f"init has {init.n_features} features, data has {X.shape[1]}")
    values, known = split_known(X)
    m = init
    # the log-joint of the current parameters yields both their likelihood
    # and the next E-step
    R, lse = normalize_log(_component_log_joint(m, X))
    trace = EmTrace(initial_loglik=float(lse.sum()))
    prev = trace.initial_loglik
    for _ in range(cfg.max_iter):
        mu, P = _mstep(values, known, R, m.P)
        m = MixtureParams(mu, P, init.feature_names)
        R, lse = normalize_log(_component_log_joint(m, X))
        ll = float(lse.sum())
        trace.loglik_per_iter.append(ll)
        # a single component has no latent variable: one M-step is exact
        if m.n_components == 1 or _relative_change(ll, prev) < cfg.tol:
            trace.converged = True
            break
        prev = ll
    return m, trace


def random_init(n_components: int, n_features: int, seed: int, feature_names=()) -> MixtureParams:
    rng = np.random.default_rng(seed)
    P = rng.uniform(0.25, 0.75, size=(n_components, n_features))
    return MixtureParams(np.full(n_components, 1.0 / n_components), P, feature_names)


def fit_mixture(X, K: int, restarts: int = 10, cfg: EmConfig = EmConfig()) -> tuple[MixtureParams, EmTrace]:
    """Best of ``restarts`` EM runs; restart r is seeded with ``cfg.seed + r``.

    The run with the highest final log-likelihood wins; ties go to the
    earliest restart.
    """
    X, names = _as_matrix(X)
    if K < 1:
        raise FitError("K must be at least 1")
    if restarts < 1:
        raise FitError("restarts must be at least 1")
    if X.ndim != 2 or X.shape[0] == 0:
        raise FitError("cannot fit a mixture to empty data")
    best = None
    for r in range(restarts):
        init = random_init(K, X.shape[1], cfg.seed + r, names)
        m, trace = run_mixture_em(X, init, cfg)
        ll = trace.loglik_per_iter[-1]
        if best is None or ll > best[0]:
            best = (ll, m, trace)
    return best[1], best[2]


def n_free_parameters(K: int, D: int) -> int:
    return (K - 1) + K * D


def bic(m: MixtureParams, X) -> float:
    """Log-likelihood minus half the parameter count times ln N (higher is better)."""
    X, _ = _as_matrix(X)
    return mixture_log_likelihood(m, X) - 0.5 * n_free_parameters(m.n_components, m.n_features) * np.log(X.shape[0])


def select_k(X, k_range=range(2, 11), restarts: int = 10, cfg: EmConfig = EmConfig()):
    """Grid search over K by BIC.  Returns ``(best K, {K: {"loglik", "n_params", "bic"}})``."""
    ks = list(k_range)
    if not ks:
        raise ValueError("k_range must not be empty")
    X, _ = _as_matrix(X)
    table = {}
    for K in ks:
        m, _ = fit_mixture(X, K, restarts, cfg)
        table[K] = {
            "loglik": mixture_log_likelihood(m, X),
            "n_params": n_free_parameters(K, X.shape[1]),
            "bic": bic(m, X),
        }
    best = max(ks, key=lambda k: (table[k]["bic"], -k))
    return best, table


# -------------------------------------------------------------- hierarchical

class HbmVariant(str, enum.Enum):
    PIPELINE = "pipeline"
    CLASS_CONDITIONAL = "class_conditional"


@dataclass(frozen=True, eq=False)
class HbmModel:
    """Two-tier model.

    ``pipeline``: an unsupervised mixture completes the inputs and ``top``
    classifies the completed vector.  ``class_conditional``: one mixture per
    label value; ``top`` holds the class prior and a plain naive Bayes fit,
    ``mixture`` is unused.
    """

    variant: HbmVariant
    top: MbnbParams
    mixture: MixtureParams | None = None
    class_mixtures: tuple[MixtureParams, MixtureParams] | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", HbmVariant(self.variant))
        if self.variant is HbmVariant.PIPELINE:
            if self.mixture is None or self.mixture.n_features != self.top.n_features:
                raise DataError("pipeline HBM needs a mixture matching the top tier")
        else:
            cm = self.class_mixtures
            if cm is None or len(cm) != 2:
                raise DataError("class-conditional HBM needs one mixture per class")
            if cm[0].P.shape != cm[1].P.shape or cm[0].n_features != self.top.n_features:
                raise DataError("class mixtures must share K and D")

    @property
    def pi(self) -> float:
        return self.top.pi

    @property
    def n_features(self) -> int:
        return self.top.n_features


def fit_hbm(X, y=None, K: int = 2, restarts: int = 10, alpha: float = 1.0,
            cfg: EmConfig = EmConfig(), variant="pipeline") -> HbmModel:
    """Fit both tiers.  Rows with an Unknown label still train the pipeline mixture."""
    if isinstance(X, Dataset):
        y = X.y if y is None else y
    X, names = _as_matrix(X)
    if y is None:
        raise FitError("labels are required")
    y = as_ternary_array(np.asarray(y, dtype=object), ndim=1)
    variant = HbmVariant(variant)
    labelled = ~np.isnan(y)
    if variant is HbmVariant.PIPELINE:
        mixture, _ = fit_mixture(X, K, restarts, cfg)
        completed = mixture_impute(mixture, X)
        top = fit_mle(completed[labelled], y[labelled], alpha, names)
        return HbmModel(variant, top, mixture=mixture)
    mixtures = []
    for b in (0, 1):
        rows = X[y == b]
        if rows.shape[0] < K:
            raise FitError(f"class y={b} has {rows.shape[0]} rows, fewer than K={K}")
        mixtures.append(fit_mixture(rows, K, restarts, cfg)[0])
    top = fit_mle(X[labelled], y[labelled], alpha, names)
    return HbmModel(variant, top, class_mixtures=tuple(mixtures))


def class_log_evidence(h: HbmModel, X) -> np.ndarray:
    """(N, 2) matrix of ``log M_b(x_o)`` for the class-conditional variant."""
    return np.column_stack([
        logsumexp(_component_log_joint(h.class_mixtures[b], X), axis=1) for b in (0, 1)
    ])


def hbm_posterior(h: HbmModel, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != h.n_features:
        raise DataError(f"expected {h.n_features} features, got {x.shape[-1]}")
    if h.variant is HbmVariant.PIPELINE:
        return posterior(h.top, mixture_impute(h.mixture, x))
    a = class_log_evidence(h, np.atleast_2d(x))
    q = expit(np.log(h.pi) - np.log1p(-h.pi) + a[:, 1] - a[:, 0])
    return float(q[0]) if x.ndim == 1 else q


# ---------------------------------------------------------------- estimators

class BernoulliMixture(TransformerMixin, BaseEstimator):
    """Mixture of multivariate Bernoullis fitted by EM with random restarts.

    ``transform`` completes Unknown cells with their mixture expectation.
    """

    def __init__(self, n_components=2, restarts=10, tol=1e-6, max_iter=200, random_state=42):
        self.n_components = n_components
        self.restarts = restarts
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def _cfg(self):
        return EmConfig(tol=self.tol, max_iter=self.max_iter, seed=self.random_state)

    def fit(self, X, y=None):
        X = _check_X(X)
        self.params_, self.trace_ = fit_mixture(X, self.n_components, self.restarts, self._cfg())
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        return np.atleast_2d(mixture_impute(self.params_, _check_X(X)))

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        return np.atleast_2d(responsibilities(self.params_, _check_X(X)))

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)

    def score(self, X, y=None):
        """Mean per-row log-likelihood."""
        check_is_fitted(self, "params_")
        X = _check_X(X)
        return mixture_log_likelihood(self.params_, X) / X.shape[0]

    def bic(self, X):
        check_is_fitted(self, "params_")
        return bic(self.params_, _check_X(X))


class HierarchicalBernoulliClassifier(ClassifierMixin, BaseEstimator):
    """Bernoulli mixture under a naive Bayes top tier.

    variant : {"pipeline", "class_conditional"}
        ``"pipeline"`` fits one unsupervised mixture (labelled and unlabelled
        rows) and a naive Bayes classifier on the mixture-completed inputs;
        ``"class_conditional"`` fits one mixture per class.
    """

    def __init__(self, n_components=2, variant="pipeline", restarts=10, alpha=1.0,
                 theta=0.5, tol=1e-6, max_iter=200, random_state=42):
        self.n_components = n_components
        self.variant = variant
        self.restarts = restarts
        self.alpha = alpha
        self.theta = theta
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y, feature_names=None):
        X = _check_X(X)
        cfg = EmConfig(tol=self.tol, max_iter=self.max_iter, seed=self.random_state)
        names = feature_names if feature_names is not None else ()
        ds_names = tuple(names) or tuple(f"f{i + 1}" for i in range(X.shape[1]))
        model = fit_hbm(X, y, self.n_components, self.restarts, self.alpha, cfg, self.variant)
        self.model_ = _rename(model, ds_names)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        q = np.atleast_1d(hbm_posterior(self.model_, _check_X(X)))
        return np.column_stack([1.0 - q, q])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)

    def decide(self, X):
        return [decide(q, self.theta) for q in self.predict_proba(X)[:, 1]]


def _rename(h: HbmModel, names) -> HbmModel:
    top = MbnbParams(h.top.pi, h.top.p1, h.top.p0, names, h.top.alpha)
    mix = None if h.mixture is None else MixtureParams(h.mixture.mu, h.mixture.P, names)
    cms = None
    if h.class_mixtures is not None:
        cms = tuple(MixtureParams(c.mu, c.P, names) for c in h.class_mixtures)
    return HbmModel(h.variant, top, mix, cms)
