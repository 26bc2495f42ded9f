"""Score matrices, rank transforms and rank-similarity measures.

Ranks follow the outlier convention used throughout the package: rank 1 is
the most anomalous sample (largest score), and tied scores share the average
of the positions they span.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from uoms.errors import DegenerateRanking, EmptyInput, ShapeMismatch

#: relative tolerance under which two internal-measure values count as tied
TIE_RTOL = 1e-12


@dataclass
class ScoreMatrix:
    """Raw outlier scores of ``n_models`` models on one dataset.

    Columns follow the orientation contract: higher score means more anomalous.
    Use :meth:`from_array` to build one from detector output; it replaces
    non-finite entries with the column minimum and records how many were
    replaced per column in ``replaced``.
    """

    dataset_id: str
    scores: np.ndarray
    model_ids: list[str]
    replaced: np.ndarray = field(default=None)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.ndim != 2:
            raise ShapeMismatch(f"scores must be 2-D, got shape {self.scores.shape}")
        if self.scores.shape[1] != len(self.model_ids):
            raise ShapeMismatch(
                f"{self.scores.shape[1]} score columns but {len(self.model_ids)} model ids"
            )
        if self.replaced is None:
            self.replaced = np.zeros(self.scores.shape[1], dtype=int)
        if not np.all(np.isfinite(self.scores)):
            raise ShapeMismatch("ScoreMatrix holds non-finite scores; build it with from_array")

    @classmethod
    def from_array(cls, dataset_id, scores, model_ids) -> ScoreMatrix:
        scores = np.array(scores, dtype=float, copy=True)
        if scores.ndim == 1:
            scores = scores[:, None]
        bad = ~np.isfinite(scores)
        for col in np.flatnonzero(bad.any(axis=0)):
            finite = scores[~bad[:, col], col]
            scores[bad[:, col], col] = finite.min() if finite.size else 0.0
        return cls(dataset_id, scores, list(model_ids), replaced=bad.sum(axis=0))

    @property
    def n_samples(self) -> int:
        return self.scores.shape[0]

    @property
    def n_models(self) -> int:
        return self.scores.shape[1]

    @property
    def degenerate(self) -> np.ndarray:
        """Boolean mask of columns with fewer than two distinct values."""
        return np.ptp(self.scores, axis=0) == 0

    @property
    def families(self) -> list[str]:
        return [mid.split("|", 1)[0] for mid in self.model_ids]

    def ranks(self) -> np.ndarray:
        """Fractional ranks of every column, shape ``(n_samples, n_models)``."""
        return rank_columns(self.scores)


def to_rank_vector(column) -> np.ndarray:
    """Rank a score column so that the largest score gets rank 1.

    >>> to_rank_vector([2.0, 2.0, 1.0])
    array([1.5, 1.5, 3. ])
    """
    column = np.asarray(column, dtype=float)
    if column.size == 0:
        raise EmptyInput("cannot rank an empty score vector")
    return stats.rankdata(-column, method="average")


def rank_columns(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if scores.shape[0] == 0:
        raise EmptyInput("cannot rank an empty score matrix")
    return stats.rankdata(-scores, method="average", axis=0)


def _check_pair(a, b, min_len=2):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeMismatch(f"rank vectors differ in shape: {a.shape} vs {b.shape}")
    if a.size < min_len:
        raise ShapeMismatch(f"need at least {min_len} entries, got {a.size}")
    return a, b


def spearman_rho(a, b) -> float:
    """Pearson correlation of two fractional-rank vectors."""
    a, b = _check_pair(a, b)
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt(da @ da)
    nb = np.sqrt(db @ db)
    if na == 0 or nb == 0:
        raise DegenerateRanking("constant ranking has no defined correlation")
    return float(np.clip(da @ db / (na * nb), -1.0, 1.0))


def kendall_tau(a, b) -> float:
    """Kendall's tau-b between two rank vectors."""
    a, b = _check_pair(a, b)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise DegenerateRanking("constant ranking has no defined correlation")
    return float(stats.kendalltau(a, b, variant="b").statistic)


def _dcg_ratio(rel: np.ndarray, positions: np.ndarray) -> float:
    disc = 1.0 / np.log2(1.0 + positions)
    dcg = rel @ disc
    ideal = np.sort(rel)[::-1] @ np.sort(disc)[::-1]
    return float(dcg / ideal)


def ndcg_similarity(a, b) -> float:
    """Symmetrized NDCG between two rankings.

    Relevance of an item under ranking ``a`` is ``1 / rank_a``; the DCG of that
    relevance is taken at the positions given by ``b`` and divided by the best
    DCG attainable with ``b``'s positions. The result averages both directions.
    """
    a, b = _check_pair(a, b, min_len=1)
    return 0.5 * (_dcg_ratio(1.0 / a, b) + _dcg_ratio(1.0 / b, a))


SIMILARITIES = {
    "rho": spearman_rho,
    "tau": kendall_tau,
    "ndcg": ndcg_similarity,
}


def _pairwise_tau_b(ranks, const, chunk_pairs=20_000):
    """Kendall tau-b for all column pairs from the signs of sample-pair differences.

    ``tau_b(i, j) = sum(sgn_i * sgn_j) / sqrt(untied_i * untied_j)``, summed over
    sample pairs in row blocks so memory stays bounded.
    """
    n, m = ranks.shape
    num = np.zeros((m, m))
    start = 0
    while start < n - 1:
        stop, size = start, 0
        while stop < n - 1 and size < chunk_pairs:
            size += n - 1 - stop
            stop += 1
        block = np.concatenate([np.sign(ranks[a] - ranks[a + 1 :]) for a in range(start, stop)])
        num += block.T @ block
        start = stop
    untied = np.diag(num).copy()
    untied[const] = 1.0
    return np.clip(num / np.sqrt(np.outer(untied, untied)), -1.0, 1.0)


def pairwise_similarity(ranks: np.ndarray, measure: str = "rho") -> np.ndarray:
    """All-pairs similarity between the columns of a rank matrix.

    Columns whose ranking is constant get similarity 0 to every other column
    (and 1 to themselves) so that consensus strategies never favour them.
    """
    ranks = np.asarray(ranks, dtype=float)
    n, m = ranks.shape
    const = np.ptp(ranks, axis=0) == 0
    if measure == "rho":
        z = ranks - ranks.mean(axis=0)
        norms = np.sqrt((z * z).sum(axis=0))
        norms[const] = 1.0
        z /= norms
        sim = np.clip(z.T @ z, -1.0, 1.0)
    elif measure == "tau":
        sim = _pairwise_tau_b(ranks, const)
    elif measure == "ndcg":
        rel = 1.0 / ranks
        disc = 1.0 / np.log2(1.0 + ranks)
        dcg = rel.T @ disc  # dcg[i, j]: relevance from i, positions from j
        ideal = np.sort(rel, axis=0)[::-1].T @ np.sort(disc, axis=0)[::-1]
        one_way = dcg / ideal
        sim = 0.5 * (one_way + one_way.T)
    else:
        raise KeyError(f"unknown similarity measure {measure!r}")
    sim[const, :] = 0.0
    sim[:, const] = 0.0
    np.fill_diagonal(sim, 1.0)
    return sim


def select_best(values, higher_better: bool = True) -> int:
    """Index of the best value; near-ties go to the lowest index.

    Values within ``TIE_RTOL`` (relative to the largest finite magnitude) of the
    best are treated as tied, which keeps selections stable when mathematically
    equal measures differ by rounding.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyInput("nothing to select from")
    v = values if higher_better else -values
    v = np.where(np.isnan(v), -np.inf, v)
    best = v.max()
    if not np.isfinite(best):
        return int(np.argmax(v))
    finite = np.abs(v[np.isfinite(v)])
    tol = TIE_RTOL * max(finite.max(), 1e-300)
    return int(np.flatnonzero(v >= best - tol)[0])
