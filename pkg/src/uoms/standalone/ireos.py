"""Separability-based internal evaluation (IREOS).

A model is rated by how well its outlier weights line up with the
separability of each sample from the rest of the data, averaged over a range
of kernel bandwidths. Separability depends only on the data, so it is
computed once per dataset (:func:`separability_matrix`) and reused for every
model in the pool (:func:`ireos_index`).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import cdist
from scipy.special import erf, expit

from uoms.detectors.neighbors import kneighbors
from uoms.errors import ConfigError, DegenerateModel, SeparabilityFailure

logger = logging.getLogger(__name__)

KERNEL = "kernel-classifier"
KNN_DISTANCE = "knn-distance"
# kernel similarity to the nearest non-clump neighbour at gamma_max
GAMMA_MAX_SIMILARITY = 0.5


@dataclass
class IreosConfig:
    n_gamma: int = 10
    gamma_max: Optional[float] = None
    clump_size: int = 10
    tol: float = 5e-3
    sampling: int = 100
    separability_mode: Optional[str] = None  # None: classifier up to max_kernel_n samples
    max_iter: int = 500
    C: float = 1e4
    max_kernel_n: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.n_gamma < 1:
            raise ConfigError("n_gamma must be >= 1")
        if self.gamma_max is not None and self.gamma_max <= 0:
            raise ConfigError("gamma_max must be > 0")
        if self.tol <= 0:
            raise ConfigError("tol must be > 0")
        if self.clump_size < 1:
            raise ConfigError("clump_size must be >= 1")
        if self.separability_mode not in (None, KERNEL, KNN_DISTANCE):
            raise ConfigError(f"unknown separability mode {self.separability_mode!r}")

    def mode_for(self, n):
        if self.separability_mode is not None:
            return self.separability_mode
        return KERNEL if n <= self.max_kernel_n else KNN_DISTANCE


def kriegel_weights(scores) -> np.ndarray:
    """Gaussian-scaled outlier probabilities ``max(0, erf((s - mu) / (sigma sqrt 2)))``."""
    scores = np.asarray(scores, dtype=float)
    sigma = scores.std()
    if sigma == 0:
        return np.zeros_like(scores)
    return np.maximum(0.0, erf((scores - scores.mean()) / (sigma * math.sqrt(2.0))))


def _clump_distance(X, clump_size):
    """Distance of every sample to its ``clump_size``-th nearest neighbour."""
    k = min(clump_size, len(X) - 1)
    dist, _ = kneighbors(X, k)
    return dist[:, -1]


def find_gamma_max(X, sampling=100, clump_size=10, seed=0):
    """Bandwidth at which a typical sample becomes separable.

    ``sampling`` rows are drawn at random; for each the distance to its
    ``clump_size``-th neighbour is taken, and ``gamma_max`` is set so that the
    kernel similarity at the median positive distance equals 0.5.
    """
    X = np.asarray(X, dtype=float)
    rng = np.random.default_rng(seed)
    rows = rng.choice(len(X), size=min(sampling, len(X)), replace=False)
    k = min(clump_size, len(X) - 1)
    # Z rows are members of X, so the first hit is the row itself
    full, _ = kneighbors(X, min(k + 1, len(X)), Z=X[rows])
    d = full[:, -1]
    d = d[d > 0]
    if d.size == 0:
        d = cdist(X, X).max(keepdims=True)
        if d.max() == 0:
            raise DegenerateModel("all samples coincide; separability undefined")
    return float(-math.log(GAMMA_MAX_SIMILARITY) / np.median(d) ** 2)


def gamma_grid(gamma_max, n_gamma):
    """``n_gamma`` equally spaced bandwidths in ``(0, gamma_max]``."""
    return gamma_max * np.arange(1, n_gamma + 1) / n_gamma


class _KernelClassifier:
    """Kernel logistic regression, one positive sample against the rest.

    Trained in the primal on the kernel's eigen-features (which makes the
    L2 penalty well conditioned) by L-BFGS with the configured iteration
    budget; ``tol`` bounds the max-abs gradient at convergence.
    """

    def __init__(self, X, gamma, C, tol, max_iter):
        sq = cdist(X, X, "sqeuclidean")
        K = np.exp(-gamma * sq)
        evals, evecs = np.linalg.eigh(K)
        keep = evals > evals.max() * 1e-10
        self.Phi = evecs[:, keep] * np.sqrt(evals[keep])
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def prob(self, j, exclude=()):
        n, r = self.Phi.shape
        mask = np.ones(n, dtype=bool)
        mask[list(exclude)] = False
        mask[j] = True
        Phi = self.Phi[mask]
        y = np.where(np.flatnonzero(mask) == j, 1.0, -1.0)
        C = self.C

        def fun(theta):
            w, b = theta[:-1], theta[-1]
            m = y * (Phi @ w + b)
            loss = np.logaddexp(0.0, -m).sum() + 0.5 * (w @ w) / C
            g = -y * expit(-m)
            return loss, np.append(Phi.T @ g + w / C, g.sum())

        res = minimize(
            fun,
            np.zeros(r + 1),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": self.max_iter, "gtol": self.tol, "ftol": 0.0},
        )
        grad = np.abs(res.jac).max()
        if grad > self.tol:
            raise SeparabilityFailure(f"sample {j}: gradient {grad:.2e} after {res.nit} iterations")
        w, b = res.x[:-1], res.x[-1]
        return float(expit(self.Phi[j] @ w + b))


def separability(X, j, gamma, clump_size=1, mode=KERNEL, C=1e4, tol=5e-3, max_iter=500):
    """Separability of sample ``j`` from the rest of ``X`` at bandwidth ``gamma``.

    In kernel mode the ``clump_size - 1`` nearest neighbours of ``j`` are left
    out of training. In knn-distance mode the result is
    ``1 - exp(-gamma * d**2)`` with ``d`` the distance to the
    ``clump_size``-th nearest neighbour.
    """
    X = np.asarray(X, dtype=float)
    if gamma <= 0:
        raise ConfigError("gamma must be > 0")
    if mode == KNN_DISTANCE:
        dist, _ = kneighbors(X, min(clump_size, len(X) - 1))
        return float(1.0 - np.exp(-gamma * dist[j, -1] ** 2))
    exclude = ()
    if clump_size > 1:
        _, idx = kneighbors(X, min(clump_size - 1, len(X) - 1))
        exclude = idx[j]
    return _KernelClassifier(X, gamma, C, tol, max_iter).prob(j, exclude)


@dataclass
class SeparabilityTable:
    p: np.ndarray  # (n_samples, n_gamma); NaN where the classifier failed
    gammas: np.ndarray
    mode: str
    skipped: int = 0


def separability_matrix(X, config: Optional[IreosConfig] = None) -> SeparabilityTable:
    """Separability of every sample at every bandwidth of the grid."""
    cfg = config or IreosConfig()
    X = np.asarray(X, dtype=float)
    n = len(X)
    gmax = cfg.gamma_max or find_gamma_max(X, cfg.sampling, cfg.clump_size, cfg.seed)
    gammas = gamma_grid(gmax, cfg.n_gamma)
    mode = cfg.mode_for(n)
    if mode == KNN_DISTANCE:
        d = _clump_distance(X, cfg.clump_size)
        return SeparabilityTable(1.0 - np.exp(-np.outer(d**2, gammas)), gammas, mode)
    exclude = [()] * n
    if cfg.clump_size > 1:
        _, idx = kneighbors(X, min(cfg.clump_size - 1, n - 1))
        exclude = list(idx)
    P = np.full((n, len(gammas)), np.nan)
    skipped = 0
    for col, gamma in enumerate(gammas):
        clf = _KernelClassifier(X, gamma, cfg.C, cfg.tol, cfg.max_iter)
        for j in range(n):
            try:
                P[j, col] = clf.prob(j, exclude[j])
            except SeparabilityFailure as exc:
                skipped += 1
                logger.info("IREOS skip at gamma=%.4g: %s", gamma, exc)
    return SeparabilityTable(P, gammas, mode, skipped)


def ireos_index(table: SeparabilityTable, scores) -> float:
    """Weighted mean separability, averaged over the bandwidth grid.

    Samples the classifier skipped at a bandwidth drop out of that
    bandwidth's numerator and denominator.
    """
    w = kriegel_weights(scores)
    if not np.any(w > 0):
        raise DegenerateModel("all outlier weights are zero")
    vals = []
    for col in range(table.p.shape[1]):
        p = table.p[:, col]
        ok = ~np.isnan(p)
        denom = w[ok].sum()
        if denom > 0:
            vals.append((p[ok] * w[ok]).sum() / denom)
    if not vals:
        raise DegenerateModel("no usable separability values")
    return float(np.mean(vals))


def ireos(X, scores, config: Optional[IreosConfig] = None) -> float:
    return ireos_index(separability_matrix(X, config), scores)
