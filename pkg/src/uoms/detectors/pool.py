"""Model pool: detector families, hyperparameter grids, dataset bundles."""

from __future__ import annotations

import itertools
import logging
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from uoms.core import ScoreMatrix
from uoms.errors import BadHyperparameter, ConfigError, DataError

from .histogram import HBOS, LODA
from .iforest import IForest
from .neighbors import ABOD, COF, KNN, LOF

logger = logging.getLogger(__name__)

# family -> ((hp1 name, values), (hp2 name, values) or None), in pool order
GRIDS = {
    "LOF": (
        ("n_neighbors", (1, 5, 10, 15, 20, 25, 50, 60, 70, 80, 90, 100)),
        ("distance", ("manhattan", "euclidean", "minkowski")),
    ),
    "KNN": (
        ("n_neighbors", (1, 5, 10, 15, 20, 25, 50, 60, 70, 80, 90, 100)),
        ("method", ("largest", "mean", "median")),
    ),
    "OCSVM": (
        ("nu", (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)),
        ("kernel", ("linear", "poly", "rbf", "sigmoid")),
    ),
    "COF": (("n_neighbors", (3, 5, 10, 15, 20, 25, 50)), None),
    "ABOD": (("n_neighbors", (3, 5, 10, 15, 20, 25, 50)), None),
    "IFOREST": (
        ("n_estimators", (10, 20, 30, 40, 50, 75, 100, 150, 200)),
        ("max_features", (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)),
    ),
    "HBOS": (
        ("n_histograms", (5, 10, 20, 30, 40, 50, 75, 100)),
        ("tolerance", (0.1, 0.2, 0.3, 0.4, 0.5)),
    ),
    "LODA": (
        ("n_bins", (10, 20, 30, 40, 50, 75, 100, 150, 200)),
        ("n_random_cuts", (5, 10, 15, 20, 25, 30)),
    ),
}

IMPORTED = frozenset({"OCSVM"})
NATIVE = tuple(f for f in GRIDS if f not in IMPORTED)
FAMILY_ALIASES = {"IFOREST": "IFOREST", "ISOLATIONFOREST": "IFOREST", "OCSVM-IMPORTED": "OCSVM"}


def canonical_family(name: str) -> str:
    key = name.strip().upper().replace("_", "")
    key = FAMILY_ALIASES.get(key, key)
    if key not in GRIDS:
        raise ConfigError(f"unknown detector family {name!r}")
    return key


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hp1: tuple
    hp2: Optional[tuple] = None
    seed: int = 0

    @property
    def model_id(self) -> str:
        parts = [self.family, f"{self.hp1[0]}={_fmt(self.hp1[1])}"]
        if self.hp2 is not None:
            parts.append(f"{self.hp2[0]}={_fmt(self.hp2[1])}")
        return "|".join(parts)

    @property
    def params(self) -> dict:
        out = {self.hp1[0]: self.hp1[1]}
        if self.hp2 is not None:
            out[self.hp2[0]] = self.hp2[1]
        return out

    @property
    def imported(self) -> bool:
        return self.family in IMPORTED

    @classmethod
    def from_id(cls, model_id: str, seed: int = 0) -> ModelSpec:
        family, *hps = model_id.split("|")
        family = canonical_family(family)
        grid = GRIDS[family]
        parsed = []
        for (name, values), token in zip([g for g in grid if g is not None], hps):
            key, _, raw = token.partition("=")
            if key != name:
                raise ConfigError(f"{model_id}: expected {name}=..., got {token!r}")
            value = type(values[0])(raw)
            parsed.append((name, value))
        if len(parsed) != sum(g is not None for g in grid):
            raise ConfigError(f"{model_id}: wrong number of hyperparameters")
        return cls(family, parsed[0], parsed[1] if len(parsed) > 1 else None, seed)


def model_seed(pool_seed: int, model_id: str) -> int:
    """Per-model RNG seed derived from the pool seed and the model id.

    Keyed on the id rather than the position so that a model gets the same
    seed whichever subset of the pool is being run.
    """
    seq = np.random.SeedSequence(pool_seed, spawn_key=(zlib.crc32(model_id.encode()),))
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def enumerate_model_pool(families=None, grids=None, seed=0, include_imported=True):
    """Cross-product of every family's hyperparameter grid.

    With the default grids this yields the 297 slots of the study (261 native
    detectors plus 36 OCSVM slots reserved for imported scores).
    """
    grids = dict(GRIDS if grids is None else grids)
    if families is None:
        chosen = [f for f in GRIDS if include_imported or f not in IMPORTED]
    else:
        chosen = [canonical_family(f) for f in families]
    for fam in chosen:
        if fam not in grids:
            raise ConfigError(f"no grid configured for family {fam!r}")
    specs = []
    for fam in chosen:
        (n1, v1), second = grids[fam]
        if second is None:
            combos = [((n1, a), None) for a in v1]
        else:
            n2, v2 = second
            combos = [((n1, a), (n2, b)) for a, b in itertools.product(v1, v2)]
        for hp1, hp2 in combos:
            spec = ModelSpec(fam, hp1, hp2)
            specs.append(ModelSpec(fam, hp1, hp2, model_seed(seed, spec.model_id)))
    ids = [s.model_id for s in specs]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate (family, hp1, hp2) in pool")
    return specs


@dataclass
class DatasetBundle:
    name: str
    X: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.X.shape[1] < 1 or self.X.shape[0] < 2:
            raise DataError(f"{self.name}: need an n x d matrix with n >= 2, d >= 1")
        if not np.all(np.isfinite(self.X)):
            raise DataError(f"{self.name}: non-finite feature values")
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (self.X.shape[0],) or not np.isin(labels, (0, 1)).all():
                raise DataError(f"{self.name}: labels must be a 0/1 vector of length n")
            self.labels = labels.astype(int)
            if not 0 < self.labels.sum() < len(self.labels):
                raise DataError(f"{self.name}: labels need at least one outlier and one inlier")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def o_t(self) -> Optional[int]:
        return None if self.labels is None else int(self.labels.sum())


def build_detector(spec: ModelSpec, n_samples: Optional[int] = None):
    """Instantiate the detector behind ``spec``.

    When ``n_samples`` is given, neighbourhood sizes that do not fit the
    dataset are clamped to ``n_samples - 1``; the caller records the clamp.
    """
    p = spec.params
    fam = spec.family
    if fam in ("LOF", "KNN", "COF", "ABOD"):
        k = p["n_neighbors"]
        if n_samples is not None and k >= n_samples:
            k = n_samples - 1
        if fam == "LOF":
            return LOF(k, metric=p["distance"])
        if fam == "KNN":
            return KNN(k, method=p["method"])
        return COF(k) if fam == "COF" else ABOD(k)
    if fam == "IFOREST":
        return IForest(p["n_estimators"], p["max_features"], seed=spec.seed)
    if fam == "HBOS":
        return HBOS(p["n_histograms"], p["tolerance"])
    if fam == "LODA":
        return LODA(p["n_bins"], p["n_random_cuts"], seed=spec.seed)
    raise BadHyperparameter(f"{fam} is not trained natively; import its scores")


def fit_score(X, spec: ModelSpec, clamp=True):
    """Fit one model and return ``(scores, flag)``; flag is '' when nothing happened."""
    X = np.asarray(X, dtype=float)
    det = build_detector(spec, len(X) if clamp else None)
    flag = ""
    k = spec.params.get("n_neighbors")
    if k is not None and getattr(det, "n_neighbors", k) != k:
        flag = f"n_neighbors clamped to {det.n_neighbors}"
    det.fit(X)
    return np.asarray(det.decision_scores_, dtype=float), flag


def _run_one(args):
    X, spec = args
    try:
        return fit_score(X, spec)
    except Exception as exc:  # one failing column must not stop the pool
        logger.warning("%s failed: %s", spec.model_id, exc)
        return np.zeros(len(X)), f"failed: {exc}"


def run_pool(bundle: DatasetBundle, specs, jobs=1):
    """Score ``bundle`` with every native spec; returns ``(ScoreMatrix, flags)``.

    Failed models yield a constant column (flagged, never selectable).
    """
    native = [s for s in specs if not s.imported]
    tasks = [(bundle.X, s) for s in native]
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    cols = [r[0] for r in results]
    flags = {s.model_id: r[1] for s, r in zip(native, results) if r[1]}
    scores = np.column_stack(cols) if cols else np.empty((bundle.n, 0))
    matrix = ScoreMatrix.from_array(bundle.name, scores, [s.model_id for s in native])
    return matrix, flags
