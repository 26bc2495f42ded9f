from .histogram import HBOS, LODA, hbos_score, loda_score
from .iforest import IForest, iforest_score
from .neighbors import ABOD, COF, KNN, LOF, abod_score, cof_score, kneighbors, knn_score, lof_score
from .pool import (
    GRIDS,
    IMPORTED,
    NATIVE,
    DatasetBundle,
    ModelSpec,
    build_detector,
    canonical_family,
    enumerate_model_pool,
    fit_score,
    run_pool,
)
