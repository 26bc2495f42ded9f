"""Histogram detectors: HBOS and LODA.

Both min-max normalise features with the training range before binning.
"""

from __future__ import annotations

import math

import numpy as np

from uoms.errors import BadHyperparameter

HBOS_ALPHA = 0.1
LODA_EPS = 1e-12


def _edges(lo, hi, n_bins):
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, n_bins + 1)


def _bin_index(edges, x):
    return np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(edges) - 2)


class MinMax:
    def fit(self, X):
        X = np.asarray(X, dtype=float)
        self.lo_ = X.min(axis=0)
        span = X.max(axis=0) - self.lo_
        self.span_ = np.where(span > 0, span, 1.0)
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.lo_) / self.span_


class HBOS:
    """Histogram-based outlier score with static equal-width bins.

    ``tolerance`` only matters for points outside the training range: a value
    beyond the outermost edge by at most ``tolerance`` bin widths takes that
    edge bin's density, anything further takes the smallest bin density of
    the feature. In-sample scoring never leaves the range.
    """

    def __init__(self, n_bins=10, tolerance=0.5, alpha=HBOS_ALPHA):
        if n_bins < 2:
            raise BadHyperparameter("HBOS needs n_bins >= 2")
        if tolerance < 0:
            raise BadHyperparameter("HBOS tolerance must be >= 0")
        self.n_bins = n_bins
        self.tolerance = tolerance
        self.alpha = alpha

    def fit(self, X):
        self.scaler_ = MinMax().fit(X)
        Xn = self.scaler_.transform(X)
        d = Xn.shape[1]
        self.edges_ = np.empty((d, self.n_bins + 1))
        self.density_ = np.empty((d, self.n_bins))
        for f in range(d):
            self.edges_[f] = _edges(0.0, 1.0, self.n_bins)
            counts = np.bincount(_bin_index(self.edges_[f], Xn[:, f]), minlength=self.n_bins)
            width = self.edges_[f][1] - self.edges_[f][0]
            self.density_[f] = counts / (len(Xn) * width)
        self.decision_scores_ = self._score(Xn)
        return self

    def _score(self, Xn):
        out = np.zeros(len(Xn))
        for f in range(Xn.shape[1]):
            edges, dens = self.edges_[f], self.density_[f]
            log_dens = -np.log2(dens + self.alpha)
            width = edges[1] - edges[0]
            x = Xn[:, f]
            contrib = log_dens[_bin_index(edges, x)]
            outside = (x < edges[0]) | (x > edges[-1])
            gap = np.where(x < edges[0], edges[0] - x, x - edges[-1])
            far = outside & (gap > self.tolerance * width)
            contrib[far] = log_dens.max()
            out += contrib
        return out

    def score_samples(self, Z):
        return self._score(self.scaler_.transform(Z))


class LODA:
    """Lightweight on-line detector of anomalies (batch form).

    Each random cut is a sparse Gaussian projection with ``ceil(sqrt(d))``
    non-zero weights; the score is the mean negative log bin probability over
    cuts. Points projected outside a cut's range fall in its edge bins.
    """

    def __init__(self, n_bins=10, n_random_cuts=100, seed=0):
        if n_bins < 2:
            raise BadHyperparameter("LODA needs n_bins >= 2")
        if n_random_cuts < 1:
            raise BadHyperparameter("LODA needs n_random_cuts >= 1")
        self.n_bins = n_bins
        self.n_random_cuts = n_random_cuts
        self.seed = seed

    def fit(self, X):
        self.scaler_ = MinMax().fit(X)
        Xn = self.scaler_.transform(X)
        d = Xn.shape[1]
        rng = np.random.default_rng(self.seed)
        n_nonzero = math.ceil(math.sqrt(d))
        self.projections_ = np.zeros((self.n_random_cuts, d))
        self.edges_ = np.empty((self.n_random_cuts, self.n_bins + 1))
        self.prob_ = np.empty((self.n_random_cuts, self.n_bins))
        for c in range(self.n_random_cuts):
            support = rng.permutation(d)[:n_nonzero]
            self.projections_[c, support] = rng.standard_normal(n_nonzero)
            z = Xn @ self.projections_[c]
            self.edges_[c] = _edges(z.min(), z.max(), self.n_bins)
            counts = np.bincount(_bin_index(self.edges_[c], z), minlength=self.n_bins)
            prob = counts + LODA_EPS
            self.prob_[c] = prob / prob.sum()
        self.decision_scores_ = self._score(Xn)
        return self

    def _score(self, Xn):
        out = np.zeros(len(Xn))
        for c in range(self.n_random_cuts):
            z = Xn @ self.projections_[c]
            out -= np.log(self.prob_[c][_bin_index(self.edges_[c], z)])
        return out / self.n_random_cuts

    def score_samples(self, Z):
        return self._score(self.scaler_.transform(Z))


def hbos_score(X, n_bins, tolerance=0.5):
    return HBOS(n_bins, tolerance).fit(X).decision_scores_


def loda_score(X, n_bins, n_random_cuts, seed=0):
    return LODA(n_bins, n_random_cuts, seed).fit(X).decision_scores_
