"""Paired one-sided Wilcoxon tests, baselines and the q-th-best analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

from uoms.errors import ConfigError, ShapeMismatch

ALPHA = 0.05
EXACT_MAX_N = 25


@dataclass
class WilcoxonResult:
    pvalue: float
    statistic: float  # W+, the rank sum of positive differences
    n_nonzero: int
    exact: bool
    no_signal: bool = False


def _exact_upper_tail(doubled_ranks, w2):
    """``P(2 W+ >= w2)`` under random signs, by dynamic programming over rank sums."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks:
        counts[r:] = counts[r:] + counts[: total + 1 - r].copy()
    return float(counts[w2:].sum() / counts.sum())


def wilcoxon_one_sided(a, b, exact_max_n=EXACT_MAX_N, continuity=False, zero_tol=0.0) -> WilcoxonResult:
    """Signed-rank test of the alternative "``a`` tends to exceed ``b``".

    Differences within ``zero_tol`` of zero are dropped. Up to
    ``exact_max_n`` remaining pairs the null distribution is enumerated
    exactly (tied ranks included); above that a normal approximation with
    tie-corrected variance is used. ``continuity`` toggles the 0.5
    continuity correction of the approximation; without it the two
    one-sided p-values of a pair of samples add up to one.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeMismatch("paired samples must be 1-D and of equal length")
    d = a - b
    d = d[np.abs(d) > zero_tol]
    n = d.size
    if n == 0:
        return WilcoxonResult(1.0, 0.0, 0, True, no_signal=True)
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= exact_max_n:
        doubled = np.rint(2 * ranks).astype(int)
        w2 = int(np.rint(2 * w_plus))
        return WilcoxonResult(_exact_upper_tail(doubled, w2), w_plus, n, True)
    _, tie_sizes = np.unique(ranks, return_counts=True)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_sizes**3 - tie_sizes) / 48.0
    num = w_plus - mean - (0.5 if continuity else 0.0)
    return WilcoxonResult(float(norm.sf(num / math.sqrt(var))), w_plus, n, False)


def baseline_random(perf) -> np.ndarray:
    """Expected metric of a uniformly drawn pool member, per dataset (row)."""
    perf = np.asarray(perf, dtype=float)
    if perf.ndim != 2 or perf.shape[1] == 0:
        raise ConfigError("need a (datasets, models) performance matrix with at least one model")
    return perf.mean(axis=1)


def baseline_family(perf, model_ids, family) -> np.ndarray:
    """Expected metric of a uniformly drawn model of one family, per dataset."""
    perf = np.asarray(perf, dtype=float)
    cols = [j for j, mid in enumerate(model_ids) if mid.split("|", 1)[0].lower() == family.lower()]
    if not cols:
        raise ConfigError(f"no models of family {family!r} in the pool")
    return perf[:, cols].mean(axis=1)


def smallest_q(selected_perf, model_perf, alpha=ALPHA, **test_kw) -> int:
    """Smallest ``q`` whose q-th best model is not significantly better than the selection.

    ``model_perf`` has one row per dataset and one column per model; each row
    is sorted in descending order before the scan. Returns ``N + 1`` when
    every q-th best model is significantly better.
    """
    selected_perf = np.asarray(selected_perf, dtype=float)
    ranked = -np.sort(-np.asarray(model_perf, dtype=float), axis=1)
    if ranked.shape[0] != selected_perf.size:
        raise ShapeMismatch("one selected value per dataset is required")
    for q in range(1, ranked.shape[1] + 1):
        if wilcoxon_one_sided(ranked[:, q - 1], selected_perf, **test_kw).pvalue > alpha:
            return q
    return ranked.shape[1] + 1
