"""Independent reference implementations used as test oracles.

These deliberately avoid the package's vectorised log-space code: they loop
over completions, rows and confusion-matrix cells in plain Python.
"""

import itertools
import math

import numpy as np


def _ber(x, p):
    out = 1.0
    for xi, pi in zip(x, p):
        out *= pi if xi == 1 else 1.0 - pi
    return out


def completions(x):
    """Every 0/1 vector agreeing with ``x`` on its known (non-nan) cells."""
    unknown = [i for i, v in enumerate(x) if math.isnan(v)]
    for bits in itertools.product((0, 1), repeat=len(unknown)):
        full = [int(v) if not math.isnan(v) else 0 for v in x]
        for i, b in zip(unknown, bits):
            full[i] = b
        yield full


def brute_posterior(pi, p1, p0, x):
    num = den0 = 0.0
    for full in completions(x):
        num += pi * _ber(full, p1)
        den0 += (1.0 - pi) * _ber(full, p0)
    return num / (num + den0)


def brute_mixture_marginal(mu, P, x):
    """Per-component joint mass mu_k * P(x_o | k) by summing completions."""
    return np.array([sum(mu[k] * _ber(full, P[k]) for full in completions(x)) for k in range(len(mu))])


def brute_expected(pi, p1, p0, x):
    """E[x_u | x_o] by enumerating completions of the full joint."""
    x = list(x)
    unknown = [i for i, v in enumerate(x) if math.isnan(v)]
    total = 0.0
    acc = np.zeros(len(unknown))
    for full in completions(x):
        w = pi * _ber(full, p1) + (1.0 - pi) * _ber(full, p0)
        total += w
        acc += w * np.array([full[i] for i in unknown])
    return acc / total


def naive_metrics(y_true, y_pred):
    """Weighted precision/recall/F1 and G-mean from a hand-built confusion matrix."""
    tp = fp = tn = fn = 0
    for t, p in zip(y_true, y_pred):
        if t == 1 and p == 1:
            tp += 1
        elif t == 0 and p == 1:
            fp += 1
        elif t == 0 and p == 0:
            tn += 1
        else:
            fn += 1

    def ratio(a, b):
        return a / b if b else 0.0

    prec = {1: ratio(tp, tp + fp), 0: ratio(tn, tn + fn)}
    rec = {1: ratio(tp, tp + fn), 0: ratio(tn, tn + fp)}
    f1 = {b: ratio(2 * prec[b] * rec[b], prec[b] + rec[b]) for b in (0, 1)}
    n = tp + fp + tn + fn
    w = {1: (tp + fn) / n, 0: (tn + fp) / n}
    return {
        "precision": sum(w[b] * prec[b] for b in (0, 1)),
        "recall": sum(w[b] * rec[b] for b in (0, 1)),
        "f1": sum(w[b] * f1[b] for b in (0, 1)),
        "gmean": math.sqrt(rec[0] * rec[1]),
    }


def friedman_statistic(scores):
    """Friedman chi-square from average ranks (higher score = better = rank 1)."""
    scores = np.asarray(scores, dtype=float)
    n, k = scores.shape
    ranks = np.zeros_like(scores)
    for i, row in enumerate(scores):
        for j in range(k):
            better = sum(1 for v in row if v > row[j])
            ties = sum(1 for v in row if v == row[j])
            ranks[i, j] = better + (ties + 1) / 2
    mean = ranks.mean(axis=0)
    return 12 * n / (k * (k + 1)) * (np.sum(mean**2) - k * (k + 1) ** 2 / 4), mean
