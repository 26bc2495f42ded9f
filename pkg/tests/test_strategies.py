import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uoms.core import ScoreMatrix
from uoms.detectors import DatasetBundle, enumerate_model_pool, run_pool
from uoms.errors import ConfigError, DataError
from uoms.standalone import IreosConfig, separability_matrix
from uoms.strategies import (
    CONSENSUS,
    REGISTRY,
    SELECTING_CONSENSUS,
    STANDALONE,
    StrategyContext,
    resolve,
    run_strategy,
)


def _small_pool(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(size=(40, 2)), [[6.0, 6.0], [-6.0, 5.0]]])
    specs = enumerate_model_pool(families=["KNN", "HBOS"], seed=seed)[::6]
    matrix, _ = run_pool(DatasetBundle("toy", X, np.r_[np.zeros(40, int), [1, 1]]), specs)
    return X, matrix


def test_registry_groups():
    assert len(REGISTRY) == 26
    assert set(STANDALONE) | set(CONSENSUS) == set(REGISTRY)
    assert "hits-auth" not in SELECTING_CONSENSUS
    assert resolve(["all"]) == list(REGISTRY)
    assert resolve(["EM", " xb", "em"]) == ["em", "xb"]
    with pytest.raises(ConfigError):
        resolve(["oracle"])


def test_every_strategy_runs():
    X, matrix = _small_pool()
    ctx = StrategyContext(matrix, X, o_t=2, params={"ireos": {"n_gamma": 3, "clump_size": 1}})
    for name in REGISTRY:
        v = run_strategy(name, ctx)
        assert v.per_model.shape == (matrix.n_models,)
        if name in ("hits-auth", "ens-pseudo"):
            assert v.kind == "aggregate" and v.aggregate_scores.shape == (matrix.n_samples,)
        else:
            assert v.kind == "select" and v.selected_id == matrix.model_ids[v.selected]


def test_missing_inputs_and_bad_params():
    X, matrix = _small_pool()
    with pytest.raises(DataError):
        run_strategy("xb", StrategyContext(matrix))
    with pytest.raises(DataError):
        run_strategy("ireos", StrategyContext(matrix, o_t=2))
    with pytest.raises(ConfigError):
        run_strategy("hits", StrategyContext(matrix, params={"hits": {"alpha": 1}}))
    with pytest.raises(ConfigError):
        run_strategy("nope", StrategyContext(matrix))


def test_degenerate_column_never_selected():
    rng = np.random.default_rng(3)
    S = np.c_[np.ones(30), rng.normal(size=(30, 3))]
    m = ScoreMatrix("d", S, [f"M|i={i}" for i in range(4)])
    for name in ("xb", "ch", "mv", "em", "mc-rho", "hits", "ens"):
        assert run_strategy(name, StrategyContext(m, o_t=3)).selected != 0


def test_monte_carlo_level_sets():
    X, matrix = _small_pool()
    ctx = StrategyContext(matrix, X, o_t=2, params={"mv": {"mode": "monte-carlo", "n_generated": 500},
                                                   "em": {"mode": "monte-carlo", "n_generated": 500}})
    assert run_strategy("mv", ctx).flags == ["mode=monte-carlo"]
    assert run_strategy("em", ctx).per_model.shape == (matrix.n_models,)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_selection_invariant_to_transforms(seed):
    rng = np.random.default_rng(seed)
    S = rng.gamma(2.0, size=(40, 5))
    X = rng.normal(size=(40, 2))
    ids = [f"M|i={i}" for i in range(5)]
    a = ScoreMatrix("d", S, ids)
    # consensus strategies only see ranks, so any increasing map is allowed
    mono = ScoreMatrix("d", np.c_[np.log(S[:, 0]), S[:, 1] ** 3, S[:, 2:]], ids)
    for name in SELECTING_CONSENSUS:
        assert run_strategy(name, StrategyContext(a, seed=1)).selected == run_strategy(
            name, StrategyContext(mono, seed=1)).selected
    # stand-alone measures normalise scores, so positive affine maps are allowed
    aff = ScoreMatrix("d", S * rng.uniform(0.5, 5, size=5) + rng.uniform(-3, 3, size=5), ids)
    table = separability_matrix(X, IreosConfig(n_gamma=3, clump_size=1))
    for name in STANDALONE:
        va = run_strategy(name, StrategyContext(a, X, 4, ireos_table=table))
        vb = run_strategy(name, StrategyContext(aff, X, 4, ireos_table=table))
        np.testing.assert_allclose(va.per_model, vb.per_model, rtol=1e-6, atol=1e-9)
