"""Vectorised product-Bernoulli log-likelihoods over ternary/soft data."""

from __future__ import annotations

import numpy as np

EPS = 1e-9


def clamp(p):
    return np.clip(p, EPS, 1.0 - EPS)


def split_known(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (values with Unknown zeroed, known mask as float)."""
    X = np.asarray(X, dtype=float)
    known = ~np.isnan(X)
    return np.where(known, X, 0.0), known.astype(float)


def log_bernoulli(X: np.ndarray, P: np.ndarray) -> np.ndarray:
    """``L[t, k] = sum_d log Ber(x_td | P_kd)`` over known cells of row t.

    Soft cells enter as fractional exponents ``x log p + (1 - x) log(1 - p)``;
    ``nan`` cells are marginalised (their factor is 1).
    """
    X = np.atleast_2d(X)
    P = np.atleast_2d(P)
    values, known = split_known(X)
    return values @ np.log(P).T + (known - values) @ np.log1p(-P).T


def logsumexp(a: np.ndarray, axis: int = -1, keepdims: bool = False) -> np.ndarray:
    # the ufunc reduction avoids scipy's per-call array-API dispatch, which
    # dominates the cost of EM on small matrices
    return np.logaddexp.reduce(np.asarray(a, dtype=float), axis=axis, keepdims=keepdims)


def normalize_log(a: np.ndarray, axis: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalise log weights; returns (probabilities, log normaliser)."""
    lse = logsumexp(a, axis=axis, keepdims=True)
    return np.exp(a - lse), np.squeeze(lse, axis=axis)
