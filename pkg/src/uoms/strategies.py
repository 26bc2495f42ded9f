"""Registry of model-selection strategies with a uniform verdict type.

A strategy maps a :class:`~uoms.core.ScoreMatrix` (plus, for some, the
feature matrix and the outlier count) to a :class:`StrategyVerdict`. Most
strategies *select* one model. ``hits-auth`` and ``ens-pseudo`` instead
*aggregate* the pool into a new score vector, which is evaluated directly.
"""

from __future__ import annotations

import dataclasses
import inspect
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from uoms import consensus
from uoms.core import ScoreMatrix, select_best
from uoms.errors import ConfigError, DataError, NumericalError
from uoms.standalone import cluster, levelset
from uoms.standalone.ireos import IreosConfig, SeparabilityTable, ireos_index, separability_matrix

logger = logging.getLogger(__name__)

HIGHER = cluster.HIGHER
LOWER = cluster.LOWER
SIMILARITY_SUFFIX = {"rho": "rho", "tau": "tau", "ndcg": "ndcg"}


@dataclass
class StrategyContext:
    matrix: ScoreMatrix
    X: Optional[np.ndarray] = None
    o_t: Optional[int] = None
    seed: int = 0
    params: dict = field(default_factory=dict)  # per-strategy keyword overrides
    ireos_table: Optional[SeparabilityTable] = None

    def need_X(self, name):
        if self.X is None:
            raise DataError(f"strategy {name!r} needs the feature matrix")
        return self.X

    def need_o_t(self, name):
        if self.o_t is None:
            raise DataError(f"strategy {name!r} needs the outlier count o_t")
        return self.o_t


@dataclass
class StrategyVerdict:
    strategy: str
    per_model: np.ndarray
    orientation: str
    selected: Optional[int] = None
    selected_id: Optional[str] = None
    aggregate_scores: Optional[np.ndarray] = None
    flags: list = field(default_factory=list)

    @property
    def kind(self) -> str:
        return "aggregate" if self.selected is None else "select"


def _select(name, ctx, values, orientation, flags=()) -> StrategyVerdict:
    values = np.asarray(values, dtype=float)
    worst = -np.inf if orientation == HIGHER else np.inf
    values = np.where(ctx.matrix.degenerate, worst, values)
    idx = select_best(values, orientation == HIGHER)
    return StrategyVerdict(name, values, orientation, idx, ctx.matrix.model_ids[idx], flags=list(flags))


def _cluster(which):
    def run(ctx, name):
        o_t = ctx.need_o_t(name)
        vals = cluster.cluster_indices(ctx.matrix.scores, o_t, which)
        return _select(name, ctx, vals, cluster.ORIENTATION[which])

    return run


def _levelset_inputs(ctx, name, col, mode, n_generated):
    scores = ctx.matrix.scores[:, col]
    if mode == "univariate":
        return scores, {}
    from uoms.detectors.pool import ModelSpec, build_detector, model_seed

    X = ctx.need_X(name)
    mid = ctx.matrix.model_ids[col]
    det = build_detector(ModelSpec.from_id(mid, model_seed(ctx.seed, mid)), len(X))
    data, uniform, volume = levelset.uniform_normality(det, X, n_generated, ctx.seed)
    return data, {"uniform_scores": uniform, "volume": volume}


def _mv(ctx, name, mode="univariate", n_generated=10_000):
    vals = []
    for col in range(ctx.matrix.n_models):
        s, kw = _levelset_inputs(ctx, name, col, mode, n_generated)
        vals.append(levelset.mass_volume(s, **kw).area)
    return _select(name, ctx, vals, LOWER, [f"mode={mode}"])


def _em(ctx, name, mode="univariate", n_generated=10_000):
    vals, unbounded = [], 0
    for col in range(ctx.matrix.n_models):
        s, kw = _levelset_inputs(ctx, name, col, mode, n_generated)
        res = levelset.excess_mass(s, **kw)
        unbounded += bool(res.degenerate and np.ptp(s) > 0)
        vals.append(res.area)
    flags = [f"mode={mode}"] + ([f"unbounded EM inverse on {unbounded} models"] if unbounded else [])
    return _select(name, ctx, vals, HIGHER, flags)


def _ireos(ctx, name, **kw):
    X = ctx.need_X(name)
    if ctx.ireos_table is None:
        cfg = IreosConfig(**{"seed": ctx.seed, **kw})
        ctx.ireos_table = separability_matrix(X, cfg)
    vals = []
    for col in range(ctx.matrix.n_models):
        try:
            vals.append(ireos_index(ctx.ireos_table, ctx.matrix.scores[:, col]))
        except NumericalError:
            vals.append(-np.inf)
    flags = [f"mode={ctx.ireos_table.mode}"]
    if ctx.ireos_table.skipped:
        flags.append(f"skipped {ctx.ireos_table.skipped} separability fits")
    return _select(name, ctx, vals, HIGHER, flags)


def _from_consensus(name, ctx, res: consensus.ConsensusResult, aggregate=False) -> StrategyVerdict:
    if aggregate:
        return StrategyVerdict(name, res.per_model, HIGHER, aggregate_scores=res.aggregate_scores, flags=res.flags)
    return StrategyVerdict(
        name,
        res.per_model,
        HIGHER,
        res.selected,
        ctx.matrix.model_ids[res.selected],
        aggregate_scores=res.aggregate_scores,
        flags=res.flags,
    )


def _udr(sim):
    def run(ctx, name, P=None):
        return _from_consensus(name, ctx, consensus.udr(ctx.matrix, sim, P, ctx.seed))

    return run


def _mc(sim):
    def run(ctx, name):
        return _from_consensus(name, ctx, consensus.model_centrality(ctx.matrix, sim))

    return run


def _mcs(sim):
    def run(ctx, name, P=None):
        return _from_consensus(name, ctx, consensus.model_centrality_sampled(ctx.matrix, sim, P, ctx.seed))

    return run


def _hits(aggregate):
    def run(ctx, name, tol=1e-9, max_iter=1000):
        return _from_consensus(name, ctx, consensus.hits(ctx.matrix, tol, max_iter), aggregate)

    return run


def _ens(aggregate):
    def run(ctx, name):
        return _from_consensus(name, ctx, consensus.ensemble_select(ctx.matrix), aggregate)

    return run


REGISTRY: dict[str, Callable] = {which: _cluster(which) for which in cluster.INDICES}
REGISTRY.update({"mv": _mv, "em": _em, "ireos": _ireos})
for _sim in SIMILARITY_SUFFIX:
    REGISTRY[f"udr-{_sim}"] = _udr(_sim)
    REGISTRY[f"mc-{_sim}"] = _mc(_sim)
    REGISTRY[f"mcs-{_sim}"] = _mcs(_sim)
REGISTRY.update({"hits": _hits(False), "hits-auth": _hits(True), "ens": _ens(False), "ens-pseudo": _ens(True)})

STANDALONE = tuple(cluster.INDICES) + ("mv", "em", "ireos")
CONSENSUS = tuple(n for n in REGISTRY if n not in STANDALONE)
SELECTING_CONSENSUS = tuple(n for n in CONSENSUS if n not in ("hits-auth", "ens-pseudo"))


def resolve(names) -> list:
    """Validate strategy names; ``all`` expands to the whole registry."""
    out = []
    for n in names:
        n = n.strip().lower()
        if not n:
            continue
        if n == "all":
            out.extend(REGISTRY)
        elif n not in REGISTRY:
            raise ConfigError(f"unknown strategy {n!r}")
        else:
            out.append(n)
    return list(dict.fromkeys(out))


def run_strategy(name, ctx: StrategyContext) -> StrategyVerdict:
    if name not in REGISTRY:
        raise ConfigError(f"unknown strategy {name!r}")
    fn = REGISTRY[name]
    kw = dict(ctx.params.get(name, {}))
    allowed = set(inspect.signature(fn).parameters) - {"ctx", "name"}
    if name == "ireos":
        allowed = {f.name for f in dataclasses.fields(IreosConfig)}
    unknown = set(kw) - allowed
    if unknown:
        raise ConfigError(f"unknown parameters for {name}: {sorted(unknown)}")
    return fn(ctx, name, **kw)
