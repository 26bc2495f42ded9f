import shutil

import numpy as np
import pytest

from uoms import cli, io
from uoms.config import RunConfig
from uoms.detectors import enumerate_model_pool
from uoms.errors import DegenerateModel
from uoms.synthetic import planted_blobs


def _write_dataset(path, bundle, labels=True):
    header = [f"f{j}" for j in range(bundle.d)] + (["label"] if labels else [])
    rows = (list(x) + ([int(y)] if labels else []) for x, y in zip(bundle.X, bundle.labels))
    io.write_csv(path, header, rows)
    return str(path)


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("full")
    data = _write_dataset(root / "blobs.csv", planted_blobs(n=100, d=4, seed=1))
    out = root / "run"
    assert cli.main(["run-pool", data, "--out", str(out)]) == 0
    return root, data, out


def test_run_pool_writes_native_columns(full_run):
    _, _, out = full_run
    header, rows = io.read_csv(out / "scores" / "blobs.csv")
    assert header[0] == "sample_id" and len(header) - 1 == 261 and len(rows) == 100


def test_rerun_is_byte_identical(full_run, tmp_path):
    _, data, out = full_run
    again = tmp_path / "again"
    assert cli.main(["run-pool", data, "--out", str(again), "--families", "knn,lof,hbos"]) == 0
    first = (out / "scores" / "blobs.csv").read_text()
    # a fresh partial run followed by the rest reproduces the uninterrupted output
    assert cli.main(["run-pool", data, "--out", str(again)]) == 0
    assert (again / "scores" / "blobs.csv").read_text() == first
    assert cli.main(["run-pool", data, "--out", str(again)]) == 0
    assert (again / "scores" / "blobs.csv").read_text() == first


def test_resume_after_interruption(full_run, tmp_path, monkeypatch):
    _, data, out = full_run
    target = tmp_path / "resume"
    real = cli.run_pool
    calls = {"n": 0}

    def flaky(bundle, chunk, jobs=1):
        calls["n"] += 1
        if calls["n"] == 3:
            raise KeyboardInterrupt
        return real(bundle, chunk, jobs)

    monkeypatch.setattr(cli, "run_pool", flaky)
    with pytest.raises(KeyboardInterrupt):
        cli.main(["run-pool", data, "--out", str(target)])
    partial, _ = io.read_csv(target / "scores" / "blobs.csv")
    assert 1 < len(partial) - 1 < 261
    monkeypatch.setattr(cli, "run_pool", real)
    assert cli.main(["run-pool", data, "--out", str(target)]) == 0
    assert (target / "scores" / "blobs.csv").read_text() == (out / "scores" / "blobs.csv").read_text()


def test_family_filter(tmp_path):
    data = _write_dataset(tmp_path / "small.csv", planted_blobs(n=100, d=3, seed=2))
    assert cli.main(["run-pool", data, "--out", str(tmp_path / "r"), "--families", "knn,lof"]) == 0
    header, _ = io.read_csv(tmp_path / "r" / "scores" / "small.csv")
    assert len(header) - 1 == 72


def test_import_completes_pool(full_run, tmp_path):
    _, data, out = full_run
    run = tmp_path / "imp"
    shutil.copytree(out, run)
    ids = [s.model_id for s in enumerate_model_pool(families=["OCSVM"])]
    rng = np.random.default_rng(0)
    ext = tmp_path / "ocsvm.csv"
    io.write_csv(ext, ["sample_id", *ids], ([i, *rng.normal(size=36)] for i in range(100)))
    assert cli.main(["import-scores", str(ext), "--dataset", "blobs", "--out", str(run)]) == 0
    header, _ = io.read_csv(run / "scores" / "blobs.csv")
    assert len(header) - 1 == 297
    assert header[1:] == [s.model_id for s in enumerate_model_pool()]
    io.write_csv(ext, ["sample_id", "OCSVM|bogus=1"], [[0, 1.0]])
    with pytest.raises(Exception, match="OCSVM\\|bogus=1"):
        cli.cmd_import_scores(RunConfig(out=str(run)), ext, "blobs", "ocsvm")
    assert cli.main(["import-scores", str(ext), "--dataset", "blobs", "--out", str(run)]) == 3


def test_select_outputs_and_agreement(full_run, tmp_path):
    _, data, out = full_run
    run = tmp_path / "sel"
    shutil.copytree(out, run)
    assert cli.main(["select", data, "--out", str(run), "--strategies", "xb,rs,ch,mc-rho,hits-auth"]) == 0
    header, rows = io.read_csv(run / "select" / "blobs.csv")
    assert header[:4] == ["strategy", "kind", "selected_index", "selected_id"]
    sel = {r[0]: r for r in rows}
    assert sel["xb"][3] == sel["rs"][3] == sel["ch"][3]
    assert sel["hits-auth"][1] == "aggregate" and sel["hits-auth"][3] == ""
    mheader, mrows = io.read_csv(run / "select" / "blobs.measures.csv")
    assert mheader == ["model_id", "xb", "rs", "ch", "mc-rho", "hits-auth"] and len(mrows) == 261
    _, prow = io.read_csv(run / "perf" / "blobs.csv")
    assert len(prow) == 261
    first = (run / "select" / "blobs.csv").read_bytes()
    assert cli.main(["select", data, "--out", str(run), "--strategies", "xb,rs,ch,mc-rho,hits-auth"]) == 0
    assert (run / "select" / "blobs.csv").read_bytes() == first


def test_select_duplicated_best_model_wins(tmp_path):
    rng = np.random.default_rng(4)
    n = 60
    y = np.r_[np.zeros(55, int), np.ones(5, int)]
    truth = y + rng.normal(scale=0.3, size=n)
    noisy = [truth + rng.normal(scale=s, size=n) for s in (0.8, 1.0, 1.2, 1.5)]
    cols = np.column_stack([truth, truth * 2 + 1, *noisy])
    ids = [f"KNN|n_neighbors={k}|method=largest" for k in (5, 10, 15, 20, 25, 30)]
    data = _write_dataset(tmp_path / "dup.csv", type("B", (), {"X": rng.normal(size=(n, 2)), "labels": y, "d": 2}))
    io.write_csv(tmp_path / "run" / "scores" / "dup.csv", ["sample_id", *ids], ([i, *r] for i, r in enumerate(cols)))
    assert cli.main(["select", data, "--out", str(tmp_path / "run"), "--strategies", "mc-rho"]) == 0
    _, rows = io.read_csv(tmp_path / "run" / "select" / "dup.csv")
    assert int(rows[0][2]) in (0, 1)


def test_empty_roster_and_empty_report(full_run, tmp_path):
    _, data, out = full_run
    run = tmp_path / "empty"
    shutil.copytree(out, run)
    assert cli.main(["select", data, "--out", str(run), "--strategies", ""]) == 0
    header, rows = io.read_csv(run / "select" / "blobs.csv")
    assert rows == []
    assert cli.main(["report", "--out", str(tmp_path / "nothing")]) != 0


def _fake_run(root, deltas):
    """Selection and per-model files for synthetic datasets; ``deltas`` shifts method b."""
    rng = np.random.default_rng(0)
    ids = [s.model_id for s in enumerate_model_pool(families=["KNN", "IFOREST"])][::10]
    for i, delta in enumerate(deltas):
        perf = rng.uniform(0.1, 0.9, size=len(ids))
        io.write_csv(root / "perf" / f"d{i}.csv", ["model_id", "ap"], ([m, v] for m, v in zip(ids, perf)))
        a = perf[0]
        io.write_csv(root / "select" / f"d{i}.csv", ["strategy", "kind", "selected_index", "selected_id", "ap", "flags"],
                     [["a", "select", 0, ids[0], a, ""], ["b", "select", 0, ids[0], a + delta, ""]])
    return ids


def test_compare_self_and_epsilon(tmp_path):
    _fake_run(tmp_path, [0, 0, 0, 0, 1e-6])
    assert cli.main(["compare", "--out", str(tmp_path), "--metrics", "ap"]) == 0
    _, rows = io.read_csv(tmp_path / "compare" / "pvalues_ap.csv")
    p = {(r[0], r[1]): float(r[2]) for r in rows}
    assert p[("a", "a")] == 1.0
    assert p[("b", "a")] == 0.5 and p[("b", "a")] < 1.0
    assert p[("a", "b")] == 1.0
    header, srows = io.read_csv(tmp_path / "compare" / "summary_ap.csv")
    assert header == ["method", "p_vs_random", "p_vs_iforest_r", "q", "mean", "std"]
    assert [r[0] for r in srows] == ["a", "b", "Random", "iForest-r"]
    _fake_run(tmp_path / "few", [0, 0, 0])
    assert cli.main(["compare", "--out", str(tmp_path / "few"), "--metrics", "ap"]) == 3


def test_report_family_rows_are_hand_means(tmp_path):
    ids = _fake_run(tmp_path, [0.0] * 5)
    assert cli.main(["report", "--out", str(tmp_path), "--metrics", "ap"]) == 0
    header, rows = io.read_csv(tmp_path / "report" / "family_ap.csv")
    assert header == ["dataset", "KNN", "IFOREST", "winners"]
    _, prow = io.read_csv(tmp_path / "perf" / "d0.csv")
    vals = {m: float(v) for m, v in prow}
    knn = np.mean([v for m, v in vals.items() if m.startswith("KNN|")])
    ifo = np.mean([v for m, v in vals.items() if m.startswith("IFOREST|")])
    assert float(rows[0][1]) == pytest.approx(knn, abs=1e-15)
    assert float(rows[0][2]) == pytest.approx(ifo, abs=1e-15)
    _, spread = io.read_csv(tmp_path / "report" / "spread_ap.csv")
    assert float(spread[0][1]) == min(vals.values()) and float(spread[0][3]) == max(vals.values())
    assert "Family-wise mean ap" in (tmp_path / "report" / "report.md").read_text()


def test_inspect_manifest(tmp_path, capsys):
    data = _write_dataset(tmp_path / "m.csv", planted_blobs(n=200, d=3, seed=0))
    assert cli.main(["inspect", data, "--out", str(tmp_path / "r")]) == 0
    header, rows = io.read_csv(tmp_path / "r" / "manifest.csv")
    assert header == ["name", "n", "d", "outliers", "outlier_pct"] and rows[0][:4] == ["m", "200", "3", "10"]
    assert "outliers=10" in capsys.readouterr().out


def test_exit_codes(tmp_path, monkeypatch):
    assert cli.main(["run-pool", "--strategies", "bogus", "--out", str(tmp_path)]) == 2
    assert cli.main(["run-pool", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 3
    bad = tmp_path / "bad.ini"
    bad.write_text("[nope]\n")
    assert cli.main(["report", "--config", str(bad)]) == 2

    def boom(cfg):
        raise DegenerateModel("every model is constant")

    monkeypatch.setattr(cli, "cmd_report", boom)
    assert cli.main(["report", "--out", str(tmp_path)]) == 4
