"""Per-dataset performance tables, pairwise comparisons and family reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from uoms.core import TIE_RTOL
from uoms.errors import ConfigError, NotEnoughData, ShapeMismatch
from uoms.evaluation.stats import ALPHA, smallest_q, wilcoxon_one_sided

MIN_DATASETS = 5
RANDOM = "Random"
IFOREST_R = "iForest-r"


@dataclass
class PerfTable:
    datasets: list
    methods: list
    values: np.ndarray  # (datasets, methods)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.datasets), len(self.methods)):
            raise ShapeMismatch(
                f"values shape {self.values.shape} does not match "
                f"{len(self.datasets)} datasets x {len(self.methods)} methods"
            )
        if np.isnan(self.values).any():
            raise ShapeMismatch("performance table has missing entries")

    def column(self, method) -> np.ndarray:
        try:
            return self.values[:, self.methods.index(method)]
        except ValueError:
            raise ConfigError(f"unknown method {method!r}") from None

    def with_column(self, method, values) -> PerfTable:
        return PerfTable(self.datasets, self.methods + [method], np.column_stack([self.values, values]))


def pairwise_pvalues(table: PerfTable, rows=None, cols=None, **test_kw) -> list:
    """``(row, col, p)`` for the alternative "row method is better than column method"."""
    if len(table.datasets) < MIN_DATASETS:
        raise NotEnoughData(f"need at least {MIN_DATASETS} datasets, got {len(table.datasets)}")
    rows = table.methods if rows is None else rows
    cols = table.methods if cols is None else cols
    out = []
    for r in rows:
        for c in cols:
            res = wilcoxon_one_sided(table.column(r), table.column(c), **test_kw)
            out.append((r, c, res.pvalue))
    return out


@dataclass
class MethodSummary:
    method: str
    p_vs_random: float
    p_vs_iforest: float
    q: int
    mean: float
    std: float


def summarize(table: PerfTable, model_perf=None, random=None, iforest=None, ddof=0, alpha=ALPHA) -> list:
    """One row per method: p-values against both baselines, q, mean and std.

    ``random`` and ``iforest`` are per-dataset baseline vectors (default: the
    table's own ``Random`` / ``iForest-r`` columns when present).
    ``model_perf`` (datasets x models) enables the q-th-best column; without
    it ``q`` is 0.
    """
    if len(table.datasets) < MIN_DATASETS:
        raise NotEnoughData(f"need at least {MIN_DATASETS} datasets, got {len(table.datasets)}")
    if random is None and RANDOM in table.methods:
        random = table.column(RANDOM)
    if iforest is None and IFOREST_R in table.methods:
        iforest = table.column(IFOREST_R)
    out = []
    for j, m in enumerate(table.methods):
        v = table.values[:, j]
        p_r = np.nan if random is None else wilcoxon_one_sided(v, random).pvalue
        p_i = np.nan if iforest is None else wilcoxon_one_sided(v, iforest).pvalue
        q = 0 if model_perf is None else smallest_q(v, model_perf, alpha)
        out.append(MethodSummary(m, p_r, p_i, q, float(v.mean()), float(v.std(ddof=ddof))))
    return out


def differences(table: PerfTable, reference=IFOREST_R) -> np.ndarray:
    """Per-dataset difference of every method to ``reference`` (boxplot data)."""
    return table.values - table.column(reference)[:, None]


def family_means(perf, model_ids, families=None):
    """Mean metric per family, shape ``(datasets, families)``, and the family order."""
    perf = np.asarray(perf, dtype=float)
    fam_of = [mid.split("|", 1)[0] for mid in model_ids]
    families = list(dict.fromkeys(fam_of)) if families is None else list(families)
    fam_arr = np.array(fam_of)
    cols = []
    for f in families:
        mask = fam_arr == f
        if not mask.any():
            raise ConfigError(f"no models of family {f!r}")
        cols.append(perf[:, mask].mean(axis=1))
    return np.column_stack(cols), families


def random_from_family_means(means, sizes) -> np.ndarray:
    """Pool-wide mean per dataset from family means weighted by family size."""
    sizes = np.asarray(sizes, dtype=float)
    return np.asarray(means, dtype=float) @ sizes / sizes.sum()


def winners(means, families, rtol=TIE_RTOL) -> list:
    """Per dataset, the set of families tied for the best mean."""
    means = np.asarray(means, dtype=float)
    out = []
    for row in means:
        best = row.max()
        tol = rtol * max(1.0, abs(best))
        out.append({f for f, v in zip(families, row) if v >= best - tol})
    return out


def model_spread(perf) -> np.ndarray:
    """Per-dataset min, median and max model performance, shape ``(datasets, 3)``."""
    perf = np.asarray(perf, dtype=float)
    return np.column_stack([perf.min(axis=1), np.median(perf, axis=1), perf.max(axis=1)])
