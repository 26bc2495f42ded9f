"""Isolation forest, backed by scikit-learn's tree builder."""

from __future__ import annotations

import math

import numpy as np
from sklearn.ensemble import IsolationForest

from uoms.errors import BadHyperparameter

MAX_SUBSAMPLE = 256


class IForest:
    """Anomaly score ``2 ** (-E[path length] / c(psi))``; higher is more anomalous.

    Each tree sees ``min(256, n)`` rows and ``ceil(max_features * d)`` features.
    """

    def __init__(self, n_estimators=100, max_features=1.0, seed=0):
        if n_estimators < 1:
            raise BadHyperparameter("iForest needs n_estimators >= 1")
        if not 0 < max_features <= 1:
            raise BadHyperparameter("iForest max_features must lie in (0, 1]")
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.seed = seed

    def fit(self, X):
        X = np.asarray(X, dtype=float)
        n, d = X.shape
        self.model_ = IsolationForest(
            n_estimators=self.n_estimators,
            max_samples=min(MAX_SUBSAMPLE, n),
            max_features=max(1, math.ceil(self.max_features * d - 1e-9)),
            random_state=int(self.seed) % (2**32),
        ).fit(X)
        self.decision_scores_ = self.score_samples(X)
        return self

    def score_samples(self, Z):
        return -self.model_.score_samples(np.asarray(Z, dtype=float))


def iforest_score(X, n_estimators, max_features_fraction, seed=0):
    return IForest(n_estimators, max_features_fraction, seed).fit(X).decision_scores_
