import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import spearmanr

import oracles
from uoms.detectors import (
    ABOD,
    HBOS,
    LODA,
    DatasetBundle,
    IForest,
    ModelSpec,
    abod_score,
    build_detector,
    cof_score,
    enumerate_model_pool,
    hbos_score,
    iforest_score,
    kneighbors,
    knn_score,
    loda_score,
    lof_score,
    run_pool,
)
from uoms.detectors.pool import model_seed
from uoms.errors import BadHyperparameter, ConfigError, DataError

FAMILY_SIZES = {"LOF": 36, "KNN": 36, "OCSVM": 36, "COF": 7, "ABOD": 7, "IFOREST": 81, "HBOS": 40, "LODA": 54}


def test_pool_sizes():
    pool = enumerate_model_pool()
    assert len(pool) == 297
    counts = {}
    for s in pool:
        counts[s.family] = counts.get(s.family, 0) + 1
    assert counts == FAMILY_SIZES
    assert len(enumerate_model_pool(include_imported=False)) == 261
    assert len(enumerate_model_pool(families=["knn", "lof"])) == 72
    assert enumerate_model_pool(families=[]) == []
    cof = enumerate_model_pool(families=["COF"])
    assert [s.hp1[1] for s in cof] == [3, 5, 10, 15, 20, 25, 50]


def test_pool_ids_unique_and_round_trip():
    pool = enumerate_model_pool(seed=7)
    ids = [s.model_id for s in pool]
    assert len(set(ids)) == len(ids)
    for s in pool:
        back = ModelSpec.from_id(s.model_id, s.seed)
        assert back == s


def test_unknown_family():
    with pytest.raises(ConfigError):
        enumerate_model_pool(families=["SVDD"])


def test_seed_depends_on_id_not_position():
    full = {s.model_id: s.seed for s in enumerate_model_pool(seed=3)}
    part = enumerate_model_pool(families=["LODA"], seed=3)
    assert all(full[s.model_id] == s.seed for s in part)
    assert model_seed(3, "x") != model_seed(4, "x")


def test_knn_collinear_example():
    X = np.array([[0.0], [1.0], [10.0]])
    np.testing.assert_allclose(knn_score(X, 1, "largest"), [1, 1, 9])
    np.testing.assert_array_equal(knn_score(X, 1, "mean"), knn_score(X, 1, "largest"))


def test_knn_bad_k():
    X = np.random.default_rng(0).normal(size=(5, 2))
    with pytest.raises(BadHyperparameter):
        knn_score(X, 5)
    with pytest.raises(BadHyperparameter):
        kneighbors(X, 0)


def test_duplicates_get_equal_scores():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 3))
    X = np.vstack([X, X[:1]])
    for scores in (knn_score(X, 3), lof_score(X, 3), cof_score(X, 4), abod_score(X, 5)):
        assert scores[0] == pytest.approx(scores[-1], rel=1e-9)


def test_lof_matches_brute_force():
    X = np.random.default_rng(2).normal(size=(25, 3))
    for k in (1, 3, 7):
        np.testing.assert_allclose(lof_score(X, k), oracles.lof_brute(X, k), rtol=1e-10)


def test_lof_metric_identity_and_isolated_point():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(scale=0.1, size=(9, 2)), [[5.0, 5.0]]])
    np.testing.assert_array_equal(lof_score(X, 3, "euclidean"), lof_score(X, 3, "minkowski"))
    s = lof_score(X, 3)
    assert s[-1] > s[:-1].max()


def test_lof_grid_interior_near_one():
    g = np.array([[i, j] for i in range(7) for j in range(7)], dtype=float)
    s = lof_score(g, 4)
    interior = [(i * 7 + j) for i in range(2, 5) for j in range(2, 5)]
    assert np.all(np.abs(s[interior] - 1) <= 0.2)


def test_abod_matches_brute_force_and_ring():
    X = np.random.default_rng(4).normal(size=(20, 3))
    np.testing.assert_allclose(abod_score(X, 6), oracles.abod_brute(X, 6), rtol=1e-9)
    ang = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    ring = np.vstack([np.c_[np.cos(ang), np.sin(ang)], [[0.0, 0.0]]])
    s = abod_score(ring, 8)
    assert np.argmin(s) == 8
    with pytest.raises(BadHyperparameter):
        ABOD(1).fit(ring)


def test_cof_chain_endpoints():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0]])
    s = cof_score(X, 2)
    assert min(s[0], s[4]) >= max(s[1:4]) - 1e-12


def test_iforest_determinism_and_orientation():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(size=(199, 2)), [[100.0, 100.0]]])
    a = iforest_score(X, 50, 1.0, seed=11)
    np.testing.assert_array_equal(a, iforest_score(X, 50, 1.0, seed=11))
    wins = sum(np.argmax(iforest_score(X, 100, 1.0, seed=s)) == 199 for s in range(100))
    assert wins >= 95
    rho = spearmanr(iforest_score(X, 10, 1.0, 1), iforest_score(X, 200, 1.0, 1)).statistic
    assert rho >= 0.8
    with pytest.raises(BadHyperparameter):
        IForest(0)
    with pytest.raises(BadHyperparameter):
        IForest(10, 1.5)


def test_hbos_emptiest_bin_scores_highest():
    X = np.r_[np.zeros(20), np.full(20, 0.05), [0.55], np.ones(20)][:, None]
    s = hbos_score(X, 10)
    assert np.argmax(s) == 40
    with pytest.raises(BadHyperparameter):
        HBOS(1)


def test_hbos_tolerance_out_of_range():
    X = np.linspace(0, 1, 50)[:, None]
    det = HBOS(10, tolerance=0.5).fit(X)
    near, far = det.score_samples(np.array([[1.04], [3.0]]))
    assert near == pytest.approx(det.score_samples(np.array([[1.0]]))[0])
    assert far >= near


def test_loda_single_cut_is_one_histogram():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(80, 1))
    det = LODA(10, 1, seed=2).fit(X)
    # with d = 1 the single projection is a signed rescaling of the feature
    proj = X @ det.projections_[0]
    s = det.decision_scores_
    h = HBOS(10, alpha=0.0).fit(proj[:, None]).decision_scores_
    assert spearmanr(s, h).statistic > 0.99
    np.testing.assert_array_equal(s, loda_score(X, 10, 1, seed=2))


@given(st.integers(0, 10_000))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(15, 2))
    perm = rng.permutation(15)
    for fn in (lambda Z: knn_score(Z, 3), lambda Z: lof_score(Z, 3), lambda Z: cof_score(Z, 3),
               lambda Z: abod_score(Z, 4), lambda Z: hbos_score(Z, 5)):
        np.testing.assert_allclose(fn(X)[perm], fn(X[perm]), rtol=1e-9, atol=1e-12)


@given(st.integers(0, 10_000))
def test_translation_invariance_distance_families(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(15, 3))
    shift = rng.uniform(-50, 50, size=3)
    for fn in (lambda Z: knn_score(Z, 3), lambda Z: lof_score(Z, 3), lambda Z: cof_score(Z, 3)):
        np.testing.assert_allclose(fn(X), fn(X + shift), atol=1e-9, rtol=1e-9)


def test_planted_outlier_top_rank_every_family():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X = np.vstack([rng.normal(size=(60, 3)), [[40.0, -40.0, 40.0]]])
        specs = enumerate_model_pool(families=["KNN", "LOF", "COF", "ABOD", "HBOS", "LODA", "IFOREST"], seed=seed)
        # neighbourhoods spanning most of the data make every point see the outlier
        for spec in [s for s in specs if s.params.get("n_neighbors", 0) <= 25][::9]:
            det = build_detector(spec, len(X)).fit(X)
            assert np.argmax(det.decision_scores_) == 60, spec.model_id


def test_run_pool_clamps_and_flags():
    X = np.random.default_rng(7).normal(size=(12, 2))
    bundle = DatasetBundle("tiny", X)
    specs = enumerate_model_pool(families=["KNN", "OCSVM"])
    matrix, flags = run_pool(bundle, specs)
    assert matrix.n_models == 36  # OCSVM slots are import-only
    assert any("clamped" in f for f in flags.values())


def test_dataset_bundle_validation():
    X = np.ones((4, 2))
    assert DatasetBundle("a", X, [0, 1, 0, 0]).o_t == 1
    with pytest.raises(DataError):
        DatasetBundle("a", X, [0, 0, 0, 0])
    with pytest.raises(DataError):
        DatasetBundle("a", np.ones((1, 2)))
    with pytest.raises(DataError):
        DatasetBundle("a", X, [0, 2, 0, 0])
