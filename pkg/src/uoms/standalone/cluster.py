"""Cluster-validity indices on the one-dimensional score axis.

A model's scores are split into the ``o_t`` highest (outlier cluster) and the
rest (inlier cluster), then scored with a classic internal clustering index.
Scores are min-max normalised first so every index is invariant to positive
affine rescaling of a model's output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from uoms.errors import BadK

HIGHER = "higher-better"
LOWER = "lower-better"

ORIENTATION = {
    "xb": LOWER,
    "rs": HIGHER,
    "ch": HIGHER,
    "std": LOWER,
    "h": HIGHER,
    "s": HIGHER,
    "i": HIGHER,
    "db": LOWER,
    "sd": LOWER,
    "d": HIGHER,
}
INDICES = tuple(ORIENTATION)


@dataclass
class ScoreSplit:
    outliers: np.ndarray  # sample indices of the o_t highest scores
    inliers: np.ndarray
    c_o: float
    c_i: float
    degenerate: bool = False


def split_by_top_k(scores, o_t) -> ScoreSplit:
    """Split at the ``o_t`` highest scores; ties at the boundary go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    n = len(scores)
    if not 0 < o_t < n:
        raise BadK(f"o_t={o_t} must satisfy 0 < o_t < {n}")
    order = np.argsort(-scores, kind="stable")
    out, inl = np.sort(order[:o_t]), np.sort(order[o_t:])
    return ScoreSplit(
        out,
        inl,
        float(scores[out].mean()),
        float(scores[inl].mean()),
        degenerate=bool(np.ptp(scores) == 0),
    )


def _silhouette(x_o, x_i):
    """Mean silhouette of a two-cluster 1-D partition via sorted prefix sums."""

    def mean_abs_dist(points, ref, exclude_self):
        # mean |p - r| over r in ref, for each p
        ref = np.sort(ref)
        csum = np.concatenate([[0.0], np.cumsum(ref)])
        pos = np.searchsorted(ref, points, side="right")
        below = points * pos - csum[pos]
        above = (csum[-1] - csum[pos]) - points * (len(ref) - pos)
        m = len(ref) - 1 if exclude_self else len(ref)
        if m == 0:
            return np.full(len(points), np.nan)
        return (below + above) / m

    def sil(own, other):
        a = mean_abs_dist(own, own, True)
        b = mean_abs_dist(own, other, False)
        if len(own) == 1:
            return np.zeros(1)
        denom = np.maximum(a, b)
        return np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)

    return float(np.concatenate([sil(x_o, x_i), sil(x_i, x_o)]).mean())


def cluster_index(scores, o_t, which="xb"):
    """Return ``(value, orientation)`` for one index on one model's scores.

    Zero separation between the two cluster centres (including constant
    scores) yields the worst possible value for the index's orientation.
    """
    if which not in ORIENTATION:
        raise KeyError(f"unknown cluster index {which!r}")
    orient = ORIENTATION[which]
    worst = np.inf if orient == LOWER else -np.inf
    scores = np.asarray(scores, dtype=float)
    split = split_by_top_k(scores, o_t)
    span = np.ptp(scores)
    if split.degenerate or span == 0:
        return worst, orient
    x = (scores - scores.min()) / span
    x_o, x_i = x[split.outliers], x[split.inliers]
    n = len(x)
    c_o, c_i, c = x_o.mean(), x_i.mean(), x.mean()
    sep = abs(c_o - c_i)
    if sep == 0:
        return worst, orient
    ssw = ((x_o - c_o) ** 2).sum() + ((x_i - c_i) ** 2).sum()
    sst = ((x - c) ** 2).sum()
    ssb = sst - ssw
    if which == "xb":
        val = ssw / (n * sep**2)
    elif which == "rs":
        val = ssb / sst
    elif which == "ch":
        val = np.inf if ssw == 0 else (ssb / 1.0) / (ssw / (n - 2))
    elif which == "std":
        val = np.sqrt(ssw / (n - 2))
    elif which == "h":
        # every cross-cluster pair is ordered, so sum |x - y| = o (n - o) sep
        n_o, n_i = len(x_o), len(x_i)
        val = 2.0 / (n * (n - 1)) * n_o * n_i * sep * sep
    elif which == "s":
        val = _silhouette(x_o, x_i)
    elif which == "i":
        val = np.inf if ssw == 0 else (0.5 * np.abs(x - c).sum() / (np.abs(x_o - c_o).sum() + np.abs(x_i - c_i).sum()) * sep) ** 2
    elif which == "db":
        s_o = np.abs(x_o - c_o).mean()
        s_i = np.abs(x_i - c_i).mean()
        val = (s_o + s_i) / sep
    elif which == "sd":
        scat = 0.5 * (x_o.var() + x_i.var()) / x.var()
        dis = 2.0 / sep
        val = dis * scat + dis
    else:  # dunn
        gap = x_o.min() - x_i.max()
        diam = max(np.ptp(x_o), np.ptp(x_i))
        val = np.inf if diam == 0 else gap / diam
    return float(val), orient


def cluster_indices(scores_matrix, o_t, which="xb") -> np.ndarray:
    """Index value of every column of a score matrix."""
    scores_matrix = np.asarray(scores_matrix, dtype=float)
    return np.array([cluster_index(col, o_t, which)[0] for col in scores_matrix.T])
