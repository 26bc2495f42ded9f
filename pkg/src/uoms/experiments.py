"""Small end-to-end studies shared by the scripts and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from uoms.detectors import DatasetBundle, enumerate_model_pool, run_pool
from uoms.evaluation import average_precision, evaluate
from uoms.strategies import CONSENSUS, StrategyContext, run_strategy
from uoms.synthetic import planted_blobs


@dataclass
class StudyRun:
    name: str
    model_perf: np.ndarray  # metric of every pool member
    strategy_perf: dict = field(default_factory=dict)
    selected: dict = field(default_factory=dict)

    @property
    def best(self) -> float:
        return float(self.model_perf.max())

    @property
    def random(self) -> float:
        return float(self.model_perf.mean())


def score_strategies(bundle: DatasetBundle, matrix, strategies=CONSENSUS, seed=0, metric="ap", params=None) -> StudyRun:
    """Run ``strategies`` on a trained pool and evaluate what each one picks or builds."""
    perf = np.array([evaluate(matrix.scores[:, j], bundle.labels, metric) for j in range(matrix.n_models)])
    run = StudyRun(bundle.name, perf)
    ctx = StrategyContext(matrix, bundle.X, bundle.o_t, seed, params or {})
    for name in strategies:
        v = run_strategy(name, ctx)
        scores = v.aggregate_scores if v.kind == "aggregate" else matrix.scores[:, v.selected]
        run.strategy_perf[name] = evaluate(scores, bundle.labels, metric)
        run.selected[name] = v.selected_id
    return run


def planted_run(seed, n=500, d=8, strategies=CONSENSUS, families=None) -> StudyRun:
    """Native pool plus strategies on one planted-blob dataset."""
    bundle = planted_blobs(n=n, d=d, seed=seed)
    specs = enumerate_model_pool(families, seed=seed, include_imported=False)
    matrix, _ = run_pool(bundle, specs)
    return score_strategies(bundle, matrix, strategies, seed)


def family_mean_ap(bundle: DatasetBundle, families, seed=0) -> dict:
    """Mean AP of every native model of each family on a labelled dataset."""
    out = {}
    for fam in families:
        matrix, _ = run_pool(bundle, enumerate_model_pool([fam], seed=seed))
        out[fam] = float(np.mean([average_precision(matrix.scores[:, j], bundle.labels)
                                  for j in range(matrix.n_models)]))
    return out
