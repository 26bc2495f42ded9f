"""Label-based metrics with exact expectations over tied scores.

Samples with equal scores form a tie group whose internal order is
unknown. AP and Prec@k return their expected value over all orderings of
each group; AUC counts a tied positive/negative pair as one half.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from uoms.errors import BadK, DegenerateLabels, ShapeMismatch


def _check(scores, labels):
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ShapeMismatch(f"{scores.size} scores but {labels.size} labels")
    labels = labels.astype(bool)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise DegenerateLabels("labels need at least one positive and one negative")
    return scores, labels


def _tie_groups(scores, labels):
    """Group sizes and positive counts in descending score order."""
    uniq, inverse = np.unique(-scores, return_inverse=True)
    size = np.bincount(inverse, minlength=len(uniq))
    pos = np.bincount(inverse, weights=labels, minlength=len(uniq))
    return size, pos


def average_precision(scores, labels) -> float:
    """Mean precision at the positions of the positives (higher score first)."""
    scores, labels = _check(scores, labels)
    size, pos = _tie_groups(scores, labels)
    above = np.concatenate([[0], np.cumsum(size)[:-1]])
    pos_above = np.concatenate([[0.0], np.cumsum(pos)[:-1]])
    total = 0.0
    for g, p, s, pa in zip(size, pos, above, pos_above):
        if p == 0:
            continue
        t = np.arange(1, g + 1)
        # positives expected among the t - 1 slots before a positive at slot t
        others = (t - 1) * (p - 1) / (g - 1) if g > 1 else np.zeros(1)
        total += p / g * np.sum((pa + 1 + others) / (s + t))
    return float(total / labels.sum())


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney rank-sum identity."""
    scores, labels = _check(scores, labels)
    r = rankdata(scores)
    n_pos = labels.sum()
    n_neg = labels.size - n_pos
    return float((r[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def precision_at_k(scores, labels, k) -> float:
    """Fraction of positives among the ``k`` highest scores."""
    scores, labels = _check(scores, labels)
    if not 1 <= k <= scores.size:
        raise BadK(f"k={k} must lie in [1, {scores.size}]")
    size, pos = _tie_groups(scores, labels)
    taken, hits = 0, 0.0
    for g, p in zip(size, pos):
        room = min(g, k - taken)
        hits += p * room / g
        taken += room
        if taken == k:
            break
    return float(hits / k)


METRICS = {
    "ap": average_precision,
    "roc": roc_auc,
    "prec_at_k": precision_at_k,
}


def evaluate(scores, labels, metric="ap", k=None) -> float:
    """Dispatch on metric name; Prec@k defaults ``k`` to the number of positives."""
    if metric not in METRICS:
        raise KeyError(f"unknown metric {metric!r}")
    if metric == "prec_at_k":
        k = int(np.asarray(labels).astype(bool).sum()) if k is None else k
        return precision_at_k(scores, labels, k)
    return METRICS[metric](scores, labels)
