"""Consensus-based model evaluation over a whole score matrix.

Every strategy here looks only at rankings, so it is invariant to strictly
increasing transforms of any model's scores. Constant (degenerate) columns
never win: they get similarity 0 to everything and a per-model value of
``-inf`` (UDR, MC, MC_S), no edges (HITS), or correlation 0 (Ens).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from uoms.core import ScoreMatrix, pairwise_similarity, rank_columns, select_best
from uoms.errors import ConfigError, EmptyInput

logger = logging.getLogger(__name__)

UDR_MAX_P = 18


@dataclass
class ConsensusResult:
    per_model: np.ndarray
    selected: int
    aggregate_scores: Optional[np.ndarray] = None
    flags: list = field(default_factory=list)
    trace: dict = field(default_factory=dict)


def _rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _finish(values, degenerate, **kw):
    values = np.where(degenerate, -np.inf, values)
    return ConsensusResult(values, select_best(values), **kw)


def udr(matrix: ScoreMatrix, similarity="rho", P=None, seed=0) -> ConsensusResult:
    """Median similarity to ``P`` randomly drawn models of the same family.

    ``P`` defaults to ``min(family size - 1, 18)`` and is clamped to the
    family size minus one. Models alone in their family get ``-inf``.
    """
    if P is not None and P < 1:
        raise ConfigError("UDR needs P >= 1")
    ranks = matrix.ranks()
    fams = np.array(matrix.families)
    values = np.full(matrix.n_models, -np.inf)
    for fam in dict.fromkeys(fams):
        members = np.flatnonzero(fams == fam)
        if len(members) < 2:
            logger.info("UDR: family %s has a single model", fam)
            continue
        sim = pairwise_similarity(ranks[:, members], similarity)
        p = min(len(members) - 1, UDR_MAX_P if P is None else P)
        for pos, i in enumerate(members):
            others = np.delete(np.arange(len(members)), pos)
            picked = _rng(seed, int(i)).choice(others, size=p, replace=False)
            values[i] = np.median(sim[pos, picked])
    return _finish(values, matrix.degenerate)


def model_centrality(matrix: ScoreMatrix, similarity="rho") -> ConsensusResult:
    """Mean similarity of each model to every other model (the medoid wins)."""
    n_models = matrix.n_models
    if n_models < 2:
        raise ConfigError("model centrality needs at least two models")
    sim = pairwise_similarity(matrix.ranks(), similarity)
    values = (sim.sum(axis=1) - np.diag(sim)) / (n_models - 1)
    return _finish(values, matrix.degenerate, trace={"similarity": sim})


def default_sample_size(n_models: int) -> int:
    return max(1, min(n_models - 1, round(math.sqrt(n_models))))


def model_centrality_sampled(matrix: ScoreMatrix, similarity="rho", P=None, seed=0) -> ConsensusResult:
    """Mean similarity to ``P`` models drawn without replacement (default ``round(sqrt(N))``)."""
    n_models = matrix.n_models
    P = default_sample_size(n_models) if P is None else P
    if not 1 <= P <= n_models - 1:
        raise ConfigError(f"MC_S needs 1 <= P <= {n_models - 1}, got {P}")
    picks = []
    for i in range(n_models):
        others = np.delete(np.arange(n_models), i)
        picks.append(_rng(seed, i).choice(others, size=P, replace=False))
    sim = pairwise_similarity(matrix.ranks(), similarity)
    values = np.array([sim[i, picks[i]].mean() for i in range(n_models)])
    return _finish(values, matrix.degenerate)


def inverse_rank_weights(matrix: ScoreMatrix) -> np.ndarray:
    """``1 / rank`` of every sample under every model, shape ``(n_models, n_samples)``."""
    return 1.0 / matrix.ranks().T


def hits(matrix: ScoreMatrix, tol=1e-9, max_iter=1000) -> ConsensusResult:
    """Hubness of models and authority of samples on the model-sample graph.

    Edge weights are inverse ranks. Hubs and authorities are L2-normalised
    after every half-step; iteration stops when neither moves by more than
    ``tol`` (max-abs), or after ``max_iter`` rounds with a ``NotConverged``
    flag.
    """
    W = inverse_rank_weights(matrix)
    W[matrix.degenerate] = 0.0
    n_models = W.shape[0]
    if not W.any():
        raise EmptyInput("no non-degenerate model to build the graph from")
    h = np.full(n_models, 1.0 / math.sqrt(n_models))
    a = np.zeros(W.shape[1])
    flags = ["NotConverged"]
    it = 0
    for it in range(1, max_iter + 1):
        a_new = W.T @ h
        a_new /= np.linalg.norm(a_new)
        h_new = W @ a_new
        h_new /= np.linalg.norm(h_new)
        delta = max(np.abs(h_new - h).max(), np.abs(a_new - a).max())
        h, a = h_new, a_new
        if delta < tol:
            flags = []
            break
    return ConsensusResult(h, select_best(h), aggregate_scores=a, flags=flags, trace={"iterations": it})


def _standardized_ranks(vectors: np.ndarray) -> np.ndarray:
    """Columns replaced by centred, unit-norm ranks (zero for constant columns)."""
    r = rank_columns(vectors)
    r -= r.mean(axis=0)
    norms = np.sqrt((r * r).sum(axis=0))
    return np.divide(r, norms, out=np.zeros_like(r), where=norms > 0)


def _corr_to(z_cols: np.ndarray, vector: np.ndarray) -> np.ndarray:
    zt = _standardized_ranks(vector[:, None])[:, 0]
    return np.clip(z_cols.T @ zt, -1.0, 1.0)


def ensemble_select(matrix: ScoreMatrix, rtol=1e-12) -> ConsensusResult:
    """Greedy selective ensemble that builds a pseudo ground truth.

    Starting from the average inverse-rank vector as target, candidates are
    visited in decreasing Spearman correlation to the current target. A
    candidate ``m`` joins the ensemble ``E`` when
    ``corr(avg(E + m), target) * |E| >= C``, with ``target`` the value before
    admission; ``C`` then grows by ``m``'s correlation and the target becomes
    ``avg(E)``. The loop stops at the first rejection or when no candidates
    are left. Each model is finally rated by its correlation to the target.
    ``rtol`` absorbs rounding in the admission comparison.
    """
    inv = inverse_rank_weights(matrix).T  # (n_samples, n_models)
    n_models = inv.shape[1]
    if n_models < 1:
        raise EmptyInput("empty model pool")
    z = _standardized_ranks(inv)
    target = inv.mean(axis=1)
    remaining = list(range(n_models))
    ensemble: list[int] = []
    C = 0.0
    history = [C]
    while remaining:
        corr = _corr_to(z[:, remaining], target)
        order = np.argsort(-corr, kind="stable")
        m, corr_m = remaining[order[0]], float(corr[order[0]])
        remaining.remove(m)
        candidate = inv[:, ensemble + [m]].mean(axis=1)
        gain = float(_corr_to(_standardized_ranks(candidate[:, None]), target)[0])
        if gain * len(ensemble) >= C - rtol * max(1.0, abs(C)):
            ensemble.append(m)
            C += corr_m
            history.append(C)
            target = inv[:, ensemble].mean(axis=1)
        else:
            break
    per_model = _corr_to(z, target)
    return ConsensusResult(
        per_model,
        select_best(per_model),
        aggregate_scores=target,
        trace={"ensemble": ensemble, "C": history},
    )
