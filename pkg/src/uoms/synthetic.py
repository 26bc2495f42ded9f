"""Synthetic benchmark data: Gaussian blobs with planted extreme outliers."""

from __future__ import annotations

import numpy as np

from uoms.detectors.pool import DatasetBundle


def planted_blobs(n=500, d=8, contamination=0.05, n_blobs=3, spread=5.0, radius=(4.0, 8.0), seed=0,
                  name=None) -> DatasetBundle:
    """Unit-variance blobs with centres in ``[-spread, spread]^d`` plus far-away outliers.

    Each outlier sits at a uniformly random direction from the data centre,
    at a distance drawn from ``radius`` (in units of the blob std) beyond
    the farthest blob centre. Rows are shuffled so that index-based tie
    rules cannot favour either class.
    """
    rng = np.random.default_rng(seed)
    n_out = max(1, int(round(contamination * n)))
    n_in = n - n_out
    centres = rng.uniform(-spread, spread, size=(n_blobs, d))
    member = rng.integers(n_blobs, size=n_in)
    inliers = centres[member] + rng.normal(size=(n_in, d))
    direction = rng.normal(size=(n_out, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    reach = np.linalg.norm(centres - centres.mean(axis=0), axis=1).max()
    dist = reach + rng.uniform(*radius, size=(n_out, 1))
    outliers = centres.mean(axis=0) + direction * dist
    X = np.vstack([inliers, outliers])
    y = np.r_[np.zeros(n_in, int), np.ones(n_out, int)]
    perm = rng.permutation(n)
    return DatasetBundle(name or f"planted-{seed}", X[perm], y[perm])
