import numpy as np
import pytest

from uoms.errors import ConfigError, NotEnoughData, ShapeMismatch
from uoms.evaluation import (
    IFOREST_R,
    RANDOM,
    PerfTable,
    differences,
    family_means,
    model_spread,
    pairwise_pvalues,
    random_from_family_means,
    summarize,
    winners,
)


def _table(n=8, seed=0):
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.2, 0.6, size=n)
    vals = np.c_[base + 0.2, base, base + rng.normal(scale=0.01, size=n), base + 0.05]
    return PerfTable([f"d{i}" for i in range(n)], ["good", RANDOM, "noise", IFOREST_R], vals)


def test_perf_table_validation():
    with pytest.raises(ShapeMismatch):
        PerfTable(["a"], ["m", "n"], [[0.1]])
    with pytest.raises(ShapeMismatch):
        PerfTable(["a"], ["m"], [[np.nan]])
    t = _table()
    with pytest.raises(ConfigError):
        t.column("missing")
    assert t.with_column("x", np.zeros(8)).methods[-1] == "x"


def test_pairwise_pvalues():
    t = _table()
    p = {(r, c): v for r, c, v in pairwise_pvalues(t)}
    assert p[("good", RANDOM)] == pytest.approx(1 / 256)
    assert p[(RANDOM, "good")] == 1.0
    assert p[("good", "good")] == 1.0
    with pytest.raises(NotEnoughData):
        pairwise_pvalues(_table(n=4))


def test_summarize_uses_baseline_columns():
    t = _table()
    rows = {r.method: r for r in summarize(t)}
    assert rows["good"].p_vs_random == pytest.approx(1 / 256)
    assert rows["good"].p_vs_iforest == pytest.approx(1 / 256)
    assert rows["good"].mean == pytest.approx(t.column("good").mean())
    assert rows["good"].std == pytest.approx(t.column("good").std())
    assert rows["good"].q == 0
    model_perf = np.c_[t.column("good"), t.column(RANDOM)]
    assert {r.method: r for r in summarize(t, model_perf=model_perf)}["good"].q == 1


def test_differences_and_spread():
    t = _table()
    d = differences(t)
    np.testing.assert_allclose(d[:, 3], 0.0)
    np.testing.assert_allclose(d[:, 0], 0.15)
    spread = model_spread([[0.1, 0.5, 0.3], [0.9, 0.2, 0.4]])
    np.testing.assert_allclose(spread, [[0.1, 0.3, 0.5], [0.2, 0.4, 0.9]])


def test_family_means_and_random():
    perf = np.array([[0.1, 0.3, 0.8], [0.5, 0.5, 0.2]])
    ids = ["A|x=1", "A|x=2", "B|x=1"]
    means, fams = family_means(perf, ids)
    assert fams == ["A", "B"]
    np.testing.assert_allclose(means, [[0.2, 0.8], [0.5, 0.2]])
    # size-weighted family means give back the plain pool mean
    np.testing.assert_allclose(random_from_family_means(means, [2, 1]), perf.mean(axis=1))
    with pytest.raises(ConfigError):
        family_means(perf, ids, ["C"])


def test_winners_keep_ties():
    w = winners([[0.5, 0.5, 0.1], [0.2, 0.3, 0.1]], ["A", "B", "C"])
    assert w == [{"A", "B"}, {"B"}]
