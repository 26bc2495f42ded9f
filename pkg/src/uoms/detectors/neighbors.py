"""Distance-based detectors: kNN, LOF, COF and fast ABOD.

All of them work on exact distances. Neighbours are ordered by distance and
then by sample index, so results do not depend on the search structure.
Each detector follows a small fit / score_samples protocol so that points
other than the training set (e.g. uniform draws for Monte-Carlo level-set
estimates) can be scored against a fitted model.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from uoms.errors import BadHyperparameter

LRD_CAP = 1e12
_CHUNK_ELEMS = 4_000_000


def _metric_args(metric: str, p: float):
    metric = metric.lower()
    if metric == "minkowski" and p == 2:
        return "euclidean", {}
    if metric == "minkowski" and p == 1:
        return "cityblock", {}
    if metric == "minkowski":
        return "minkowski", {"p": p}
    if metric == "manhattan":
        return "cityblock", {}
    if metric == "euclidean":
        return "euclidean", {}
    raise BadHyperparameter(f"unknown distance {metric!r}")


def kneighbors(X, k, metric="euclidean", p=2.0, Z=None):
    """Exact k nearest neighbours.

    Without ``Z`` the neighbours of every training row are returned with the
    row itself excluded (duplicates of it are still eligible). Returns
    ``(dist, idx)`` of shape ``(m, k)`` sorted by distance, then index.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    in_sample = Z is None
    Z = X if in_sample else np.asarray(Z, dtype=float)
    avail = n - 1 if in_sample else n
    if not 1 <= k <= avail:
        raise BadHyperparameter(f"n_neighbors={k} needs 1 <= k <= {avail}")
    name, kw = _metric_args(metric, p)
    m = Z.shape[0]
    dist = np.empty((m, k))
    idx = np.empty((m, k), dtype=np.intp)
    step = max(1, _CHUNK_ELEMS // max(n, 1))
    for lo in range(0, m, step):
        hi = min(m, lo + step)
        D = cdist(Z[lo:hi], X, metric=name, **kw)
        if in_sample:
            D[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        # stable sort keeps index order among equal distances
        part = np.argsort(D, axis=1, kind="stable")[:, :k]
        idx[lo:hi] = part
        dist[lo:hi] = np.take_along_axis(D, part, axis=1)
    return dist, idx


class KNN:
    """Distance to the k-th nearest neighbour, or the mean/median of the k."""

    def __init__(self, n_neighbors=5, method="largest", metric="euclidean", p=2.0):
        if method not in ("largest", "mean", "median"):
            raise BadHyperparameter(f"unknown kNN method {method!r}")
        self.n_neighbors = n_neighbors
        self.method = method
        self.metric = metric
        self.p = p

    def _aggregate(self, dist):
        if self.method == "largest":
            return dist[:, -1].copy()
        if self.method == "mean":
            return dist.mean(axis=1)
        return np.median(dist, axis=1)

    def fit(self, X):
        self.X_ = np.asarray(X, dtype=float)
        dist, _ = kneighbors(self.X_, self.n_neighbors, self.metric, self.p)
        self.decision_scores_ = self._aggregate(dist)
        return self

    def score_samples(self, Z):
        dist, _ = kneighbors(self.X_, self.n_neighbors, self.metric, self.p, Z=Z)
        return self._aggregate(dist)


class LOF:
    """Local outlier factor; local reachability density capped at ``LRD_CAP``."""

    def __init__(self, n_neighbors=20, metric="euclidean", p=2.0):
        self.n_neighbors = n_neighbors
        self.metric = metric
        self.p = p

    @staticmethod
    def _lrd(dist, idx, kdist):
        reach = np.maximum(dist, kdist[idx]).mean(axis=1)
        with np.errstate(divide="ignore"):
            return np.minimum(1.0 / reach, LRD_CAP)

    def fit(self, X):
        self.X_ = np.asarray(X, dtype=float)
        dist, idx = kneighbors(self.X_, self.n_neighbors, self.metric, self.p)
        self.kdist_ = dist[:, -1]
        self.lrd_ = self._lrd(dist, idx, self.kdist_)
        self.decision_scores_ = self.lrd_[idx].mean(axis=1) / self.lrd_
        return self

    def score_samples(self, Z):
        dist, idx = kneighbors(self.X_, self.n_neighbors, self.metric, self.p, Z=Z)
        lrd = self._lrd(dist, idx, self.kdist_)
        return self.lrd_[idx].mean(axis=1) / lrd


def _chaining_distance(point, neighbors):
    """Average chaining distance along the set-based nearest path."""
    pts = np.vstack([point[None, :], neighbors])
    D = cdist(pts, pts)
    k = len(neighbors)
    in_path = np.zeros(k + 1, dtype=bool)
    in_path[0] = True
    # closest distance from each candidate to the current path
    reach = D[0].copy()
    costs = np.empty(k)
    for step in range(k):
        cand = np.where(in_path, np.inf, reach)
        nxt = int(np.argmin(cand))
        costs[step] = cand[nxt]
        in_path[nxt] = True
        reach = np.minimum(reach, D[nxt])
    weights = 2.0 * (k - np.arange(k)) / (k * (k + 1))
    return float(weights @ costs)


class COF:
    """Connectivity-based outlier factor (set-based nearest path)."""

    def __init__(self, n_neighbors=20):
        self.n_neighbors = n_neighbors

    def fit(self, X):
        if self.n_neighbors < 2:
            raise BadHyperparameter("COF needs n_neighbors >= 2")
        self.X_ = np.asarray(X, dtype=float)
        _, idx = kneighbors(self.X_, self.n_neighbors)
        self.ac_ = np.array(
            [_chaining_distance(self.X_[i], self.X_[idx[i]]) for i in range(len(self.X_))]
        )
        self.decision_scores_ = self._ratio(self.ac_, idx)
        return self

    def _ratio(self, ac, idx):
        denom = self.ac_[idx].mean(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = ac * np.minimum(1.0 / denom, LRD_CAP)
        return np.where(ac == 0, 0.0, out)

    def score_samples(self, Z):
        Z = np.asarray(Z, dtype=float)
        _, idx = kneighbors(self.X_, self.n_neighbors, Z=Z)
        ac = np.array([_chaining_distance(Z[i], self.X_[idx[i]]) for i in range(len(Z))])
        return self._ratio(ac, idx)


def _angle_variance(point, neighbors):
    U = neighbors - point
    sq = np.einsum("ij,ij->i", U, U)
    keep = sq > 0
    U, sq = U[keep], sq[keep]
    if len(U) < 2:
        return np.inf
    G = (U @ U.T) / np.outer(sq, sq)
    vals = G[np.triu_indices(len(U), k=1)]
    return float(np.var(vals))


class ABOD:
    """Fast angle-based outlier detection over the k-NN set.

    The score is the negated variance of distance-weighted angles, so points
    seeing their neighbours under a narrow cone score highest. Neighbours that
    coincide with the point are skipped; a point with fewer than two usable
    neighbours gets the lowest score in the batch.
    """

    def __init__(self, n_neighbors=10):
        self.n_neighbors = n_neighbors

    def fit(self, X):
        if self.n_neighbors < 2:
            raise BadHyperparameter("ABOD needs n_neighbors >= 2")
        self.X_ = np.asarray(X, dtype=float)
        _, idx = kneighbors(self.X_, self.n_neighbors)
        self.decision_scores_ = self._scores(self.X_, idx)
        return self

    def _scores(self, Z, idx):
        var = np.array([_angle_variance(Z[i], self.X_[idx[i]]) for i in range(len(Z))])
        scores = -var
        finite = np.isfinite(scores)
        if not finite.all():
            scores[~finite] = scores[finite].min() if finite.any() else 0.0
        return scores

    def score_samples(self, Z):
        Z = np.asarray(Z, dtype=float)
        _, idx = kneighbors(self.X_, self.n_neighbors, Z=Z)
        return self._scores(Z, idx)


def knn_score(X, k, method="largest", metric="euclidean", p=2.0):
    return KNN(k, method, metric, p).fit(X).decision_scores_


def lof_score(X, k, metric="euclidean", p=2.0):
    return LOF(k, metric, p).fit(X).decision_scores_


def cof_score(X, k):
    return COF(k).fit(X).decision_scores_


def abod_score(X, k):
    return ABOD(k).fit(X).decision_scores_

