"""Command-line entry point: ``uoms <subcommand> [options]``.

Run directory layout (``--out``)::

    manifest.csv                 inspect
    scores/<dataset>.csv         run-pool / import-scores
    scores/<dataset>.flags.csv
    select/<dataset>.csv         select: one row per strategy
    select/<dataset>.measures.csv
    perf/<dataset>.csv           select: every model's metrics (labelled data only)
    compare/...                  compare
    report/...                   report
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from uoms import io
from uoms.config import RunConfig, load_config, split_list
from uoms.core import ScoreMatrix
from uoms.detectors.pool import GRIDS, ModelSpec, canonical_family, enumerate_model_pool, run_pool
from uoms.errors import ConfigError, FormatError, IoError, NotEnoughData, UOMSError
from uoms.evaluation import compare as cmp
from uoms.evaluation.metrics import evaluate
from uoms.strategies import StrategyContext, run_strategy

logger = logging.getLogger("uoms")

FLAGS_SUFFIX = ".flags.csv"
MEASURES_SUFFIX = ".measures.csv"


def _dir(cfg: RunConfig, *parts) -> Path:
    return Path(cfg.out).joinpath(*parts)


def _pool_order(cfg: RunConfig) -> list:
    return [s.model_id for s in enumerate_model_pool(grids=cfg.grids, seed=cfg.seed)]


def _read_flags(path) -> dict:
    if not Path(path).exists():
        return {}
    _, rows = io.read_csv(path, "flags")
    return {r[0]: r[1] for r in rows}


def _write_flags(path, flags, order):
    ids = [m for m in order if m in flags] + sorted(m for m in flags if m not in order)
    io.write_csv(path, ["model_id", "flag"], ([m, flags[m]] for m in ids))


# ---------------------------------------------------------------- inspect


def cmd_inspect(cfg: RunConfig, stream=None) -> list:
    stream = stream or sys.stdout
    rows = []
    for path in cfg.datasets:
        b = io.read_dataset(path)
        o_t = b.o_t
        pct = None if o_t is None else 100.0 * o_t / b.n
        rows.append([b.name, b.n, b.d, o_t, pct])
    io.write_csv(_dir(cfg, "manifest.csv"), ["name", "n", "d", "outliers", "outlier_pct"], rows)
    for name, n, d, o_t, pct in rows:
        shown = "-" if pct is None else f"{pct:.3f}%"
        print(f"{name:<24} n={n:<7} d={d:<5} outliers={o_t if o_t is not None else '-':<6} {shown}", file=stream)
    return rows


# ---------------------------------------------------------------- run-pool


def cmd_run_pool(cfg: RunConfig) -> list:
    """Score every dataset with the native pool; existing columns are kept (resume)."""
    order = _pool_order(cfg)
    specs = enumerate_model_pool(cfg.families, cfg.grids, cfg.seed, include_imported=False)
    if any(s.imported for s in enumerate_model_pool(cfg.families, cfg.grids)) and cfg.families is not None:
        logger.info("imported families are skipped by run-pool; use import-scores")
    written = []
    for path in cfg.datasets:
        bundle = io.read_dataset(path)
        out = _dir(cfg, "scores", f"{bundle.name}.csv")
        flags_path = out.with_name(bundle.name + FLAGS_SUFFIX)
        if out.exists():
            current = io.read_scores(out, bundle.name)
            if current.n_samples != bundle.n:
                raise FormatError(f"{out}: {current.n_samples} rows but dataset has {bundle.n}")
        else:
            current = ScoreMatrix(bundle.name, np.empty((bundle.n, 0)), [])
        flags = _read_flags(flags_path)
        todo = [s for s in specs if s.model_id not in set(current.model_ids)]
        logger.info("%s: %d models to fit, %d already present", bundle.name, len(todo), len(specs) - len(todo))
        # checkpoint after each family so an interrupted run can resume
        for fam in dict.fromkeys(s.family for s in todo):
            chunk = [s for s in todo if s.family == fam]
            t0 = time.perf_counter()
            new, new_flags = run_pool(bundle, chunk, cfg.jobs)
            logger.info("%s: %s (%d models) in %.2fs", bundle.name, fam, len(chunk), time.perf_counter() - t0)
            current = io.merge_scores(current, new, order)
            flags.update(new_flags)
            io.write_scores(out, current)
            _write_flags(flags_path, flags, order)
        if not todo and not out.exists():
            io.write_scores(out, current)
        written.append(out)
    return written


# ---------------------------------------------------------------- import-scores


def cmd_import_scores(cfg: RunConfig, path, dataset, family) -> Path:
    """Merge externally produced columns (e.g. OCSVM) into a dataset's score matrix."""
    family = canonical_family(family)
    incoming = io.read_scores(path, dataset)
    for mid in incoming.model_ids:
        try:
            spec = ModelSpec.from_id(mid)
        except ConfigError:
            raise FormatError(f"{path}: column {mid!r} is not a model id of family {family}") from None
        if spec.family != family:
            raise FormatError(f"{path}: column {mid!r} belongs to {spec.family}, expected {family}")
    out = _dir(cfg, "scores", f"{dataset}.csv")
    if out.exists():
        current = io.read_scores(out, dataset)
    else:
        current = ScoreMatrix(dataset, np.empty((incoming.n_samples, 0)), [])
    merged = io.merge_scores(current, incoming, _pool_order(cfg))
    io.write_scores(out, merged)
    flags = _read_flags(out.with_name(dataset + FLAGS_SUFFIX))
    for mid, k in zip(incoming.model_ids, incoming.replaced):
        if k:
            flags[mid] = f"{k} non-finite scores replaced"
    if flags:
        _write_flags(out.with_name(dataset + FLAGS_SUFFIX), flags, _pool_order(cfg))
    return out


# ---------------------------------------------------------------- select


def _load_scores(cfg, name) -> ScoreMatrix:
    path = _dir(cfg, "scores", f"{name}.csv")
    if not path.exists():
        raise IoError(f"dataset {name!r}: no score matrix at {path}; run run-pool first")
    return io.read_scores(path, name)


def cmd_select(cfg: RunConfig) -> list:
    out_files = []
    for path in cfg.datasets:
        bundle = io.read_dataset(path)
        matrix = _load_scores(cfg, bundle.name)
        if matrix.n_samples != bundle.n:
            raise FormatError(f"{bundle.name}: score matrix has {matrix.n_samples} rows, dataset {bundle.n}")
        labels = bundle.labels
        ctx = StrategyContext(matrix, bundle.X, bundle.o_t, cfg.seed, cfg.strategy_params)
        rows, measures = [], []
        for name in cfg.strategies:
            t0 = time.perf_counter()
            v = run_strategy(name, ctx)
            logger.info("%s: %s in %.2fs", bundle.name, name, time.perf_counter() - t0)
            scores = v.aggregate_scores if v.kind == "aggregate" else matrix.scores[:, v.selected]
            perf = [evaluate(scores, labels, m) if labels is not None else None for m in cfg.metrics]
            rows.append([name, v.kind, v.selected, v.selected_id, *perf, ";".join(v.flags)])
            measures.append(v.per_model)
        header = ["strategy", "kind", "selected_index", "selected_id", *cfg.metrics, "flags"]
        sel = _dir(cfg, "select", f"{bundle.name}.csv")
        io.write_csv(sel, header, rows)
        io.write_csv(
            sel.with_name(bundle.name + MEASURES_SUFFIX),
            ["model_id", *cfg.strategies],
            ([mid, *(m[j] for m in measures)] for j, mid in enumerate(matrix.model_ids)),
        )
        if labels is not None:
            io.write_csv(
                _dir(cfg, "perf", f"{bundle.name}.csv"),
                ["model_id", *cfg.metrics],
                ([mid, *(evaluate(matrix.scores[:, j], labels, m) for m in cfg.metrics)]
                 for j, mid in enumerate(matrix.model_ids)),
            )
        out_files.append(sel)
    return out_files


# ---------------------------------------------------------------- compare


def _read_perf(path):
    header, rows = io.read_csv(path, "performance table")
    ids = [r[0] for r in rows]
    vals = np.array([[float(x) for x in r[1:]] for r in rows]) if rows else np.empty((0, len(header) - 1))
    return ids, header[1:], vals


def _collect(cfg: RunConfig, metric):
    """Per-dataset strategy performance and the per-model matrix for ``metric``."""
    sel_dir = _dir(cfg, "select")
    files = sorted(p for p in sel_dir.glob("*.csv") if not p.name.endswith(MEASURES_SUFFIX)) if sel_dir.is_dir() else []
    if not files:
        raise IoError(f"no selection reports under {sel_dir}; run select first")
    datasets, per_method, model_rows, model_ids = [], {}, [], None
    for f in files:
        name = f.stem
        header, rows = io.read_csv(f, "selection report")
        if metric not in header:
            raise FormatError(f"{f}: no column {metric!r}")
        col = header.index(metric)
        if any(r[col] == "" for r in rows):
            logger.info("%s: unlabelled, left out of the comparison", name)
            continue
        perf_path = _dir(cfg, "perf", f"{name}.csv")
        if not perf_path.exists():
            raise IoError(f"dataset {name!r}: missing per-model metrics {perf_path}")
        ids, metrics, vals = _read_perf(perf_path)
        if metric not in metrics:
            raise FormatError(f"{perf_path}: no column {metric!r}")
        if model_ids is None:
            model_ids = ids
        elif ids != model_ids:
            raise FormatError(f"{perf_path}: model columns differ from the first dataset")
        datasets.append(name)
        for r in rows:
            per_method.setdefault(r[0], []).append(float(r[col]))
        model_rows.append(vals[:, metrics.index(metric)])
    methods = [m for m in per_method if len(per_method[m]) == len(datasets)]
    values = np.column_stack([per_method[m] for m in methods]) if methods else np.empty((len(datasets), 0))
    return cmp.PerfTable(datasets, methods, values), np.array(model_rows), model_ids


def _write_summary(path, summary):
    io.write_csv(
        path,
        ["method", "p_vs_random", "p_vs_iforest_r", "q", "mean", "std"],
        ([s.method, s.p_vs_random, s.p_vs_iforest, s.q or None, s.mean, s.std] for s in summary),
    )


def cmd_compare(cfg: RunConfig) -> list:
    written = []
    for metric in cfg.metrics:
        table, model_perf, model_ids = _collect(cfg, metric)
        if len(table.datasets) < cmp.MIN_DATASETS:
            raise NotEnoughData(f"{metric}: need >= {cmp.MIN_DATASETS} labelled datasets, got {len(table.datasets)}")
        random = model_perf.mean(axis=1)
        fam = np.array([m.split("|", 1)[0] for m in model_ids])
        if not (fam == "IFOREST").any():
            raise ConfigError("the iForest-r baseline needs IFOREST models in the pool")
        iforest = model_perf[:, fam == "IFOREST"].mean(axis=1)
        full = table.with_column(cmp.RANDOM, random).with_column(cmp.IFOREST_R, iforest)
        base = _dir(cfg, "compare")
        io.write_csv(base / f"pvalues_{metric}.csv", ["row", "col", "p"], cmp.pairwise_pvalues(full))
        _write_summary(base / f"summary_{metric}.csv", cmp.summarize(full, model_perf, random, iforest))
        diff = cmp.differences(full)
        io.write_csv(base / f"diff_{metric}.csv", ["dataset", *full.methods],
                     ([d, *row] for d, row in zip(full.datasets, diff)))
        written += [base / f"pvalues_{metric}.csv", base / f"summary_{metric}.csv", base / f"diff_{metric}.csv"]
    return written


def pool_family_sizes(families, grids=None) -> list:
    """Number of pool slots of each named family (case-insensitive names)."""
    pool = enumerate_model_pool(grids=grids)
    counts = {}
    for s in pool:
        counts[s.family] = counts.get(s.family, 0) + 1
    return [counts[canonical_family(f)] for f in families]


def read_family_table(path):
    """Family-mean fixture: ``dataset``, one column per family, optional ``bold`` column."""
    header, rows = io.read_csv(path, "family table")
    if header[0] != "dataset":
        raise FormatError(f"{path}: first column must be 'dataset', got {header[0]!r}")
    has_bold = header[-1] == "bold"
    families = header[1:-1] if has_bold else header[1:]
    for f in families:
        try:
            canonical_family(f)
        except ConfigError:
            raise FormatError(f"{path}: column {f!r} is not a detector family") from None
    means = np.empty((len(rows), len(families)))
    for i, r in enumerate(rows):
        for j, cell in enumerate(r[1 : 1 + len(families)]):
            try:
                means[i, j] = float(cell)
            except ValueError:
                raise FormatError(f"{path}: column {families[j]!r} row {i + 2}: not a number") from None
    bold = [set(split_list(r[-1].replace(";", ","))) for r in rows] if has_bold else None
    return [r[0] for r in rows], families, means, bold


def cmd_compare_families(cfg: RunConfig, table_path) -> list:
    """Baselines, summary and winners from a reference family-mean table."""
    metric = cfg.metrics[0] if cfg.metrics else "ap"
    datasets, families, means, bold = read_family_table(table_path)
    sizes = pool_family_sizes(families, cfg.grids)
    random = cmp.random_from_family_means(means, sizes)
    ifo = [f for f in families if canonical_family(f) == "IFOREST"]
    table = cmp.PerfTable(datasets, list(families), means).with_column(cmp.RANDOM, random)
    if ifo:
        table = table.with_column(cmp.IFOREST_R, table.column(ifo[0]))
    base = _dir(cfg, "compare")
    _write_summary(base / f"family_summary_{metric}.csv", cmp.summarize(table))
    win = cmp.winners(means, families)
    rows = []
    for d, w, b in zip(datasets, win, bold or [None] * len(datasets)):
        ordered = [f for f in families if f in w]
        rows.append([d, ";".join(ordered), "" if b is None else ";".join(f for f in families if f in b),
                     "" if b is None else int(b <= w)])
    io.write_csv(base / f"family_winners_{metric}.csv", ["dataset", "winners", "bold", "bold_reproduced"], rows)
    return [base / f"family_summary_{metric}.csv", base / f"family_winners_{metric}.csv"]


# ---------------------------------------------------------------- report


def _md_table(header, rows) -> str:
    def cell(v):
        if isinstance(v, float):
            return f"{v:.3f}"
        return str(v)

    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(cell(v) for v in r) + " |" for r in rows]
    return "\n".join(lines)


def cmd_report(cfg: RunConfig) -> Path:
    perf_dir = _dir(cfg, "perf")
    sel_dir = _dir(cfg, "select")
    perf_files = sorted(perf_dir.glob("*.csv")) if perf_dir.is_dir() else []
    sel_files = sorted(p for p in sel_dir.glob("*.csv") if not p.name.endswith(MEASURES_SUFFIX)) if sel_dir.is_dir() else []
    if not perf_files and not sel_files:
        raise IoError(f"nothing to report in {cfg.out}: no selection or performance files")
    base = _dir(cfg, "report")
    md = [f"# UOMS run report: {Path(cfg.out).name}", ""]
    pool_fams = list(GRIDS)
    for metric in cfg.metrics:
        names, fam_rows, spreads = [], [], []
        families = None
        for f in perf_files:
            ids, metrics, vals = _read_perf(f)
            if metric not in metrics:
                continue
            col = vals[:, metrics.index(metric)][None, :]
            present = [fam for fam in pool_fams if any(m.split("|", 1)[0] == fam for m in ids)]
            if families is None:
                families = present
            elif present != families:
                raise FormatError(f"{f}: families differ from the other datasets")
            means, _ = cmp.family_means(col, ids, families)
            names.append(f.stem)
            fam_rows.append(means[0])
            spreads.append(cmp.model_spread(col)[0])
        if not names:
            continue
        means = np.array(fam_rows)
        win = cmp.winners(means, families)
        io.write_csv(base / f"family_{metric}.csv", ["dataset", *families, "winners"],
                     ([d, *row, ";".join(f for f in families if f in w)] for d, row, w in zip(names, means, win)))
        io.write_csv(base / f"spread_{metric}.csv", ["dataset", "min", "median", "max"],
                     ([d, *s] for d, s in zip(names, spreads)))
        body = [[d, *row, ", ".join(f for f in families if f in w)] for d, row, w in zip(names, means, win)]
        body.append(["average", *means.mean(axis=0), ""])
        if len(names) > 1:
            body.append(["std", *means.std(axis=0, ddof=1), ""])
        md += [f"## Family-wise mean {metric}", "", _md_table(["dataset", *families, "winners"], body), ""]
        md += [f"## Model {metric} spread", "",
               _md_table(["dataset", "min", "median", "max"], [[d, *s] for d, s in zip(names, spreads)]), ""]
    if sel_files:
        md += ["## Selections", ""]
        for f in sel_files:
            header, rows = io.read_csv(f, "selection report")
            md += [f"### {f.stem}", "", _md_table(header, rows), ""]
    for f in sorted(_dir(cfg, "compare").glob("summary_*.csv")) if _dir(cfg, "compare").is_dir() else []:
        header, rows = io.read_csv(f, "summary")
        rows = [[float(c) if c not in ("", "nan") and i > 0 else c for i, c in enumerate(r)] for r in rows]
        md += [f"## {f.stem.replace('_', ' ')}", "", _md_table(header, rows), ""]
    out = base / "report.md"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(md))
    return out


# ---------------------------------------------------------------- argparse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--seed", type=int, help="run seed (default 0)")
    common.add_argument("--jobs", type=int, help="worker processes for pool training")
    common.add_argument("--families", help="comma-separated detector families")
    common.add_argument("--strategies", help="comma-separated strategy names, or 'all'")
    common.add_argument("--metrics", help="comma-separated subset of ap,roc,prec_at_k")
    common.add_argument("--out", help="run directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="uoms", description="Unsupervised outlier model selection benchmark")
    sub = p.add_subparsers(dest="command", required=True)
    for name, hlp in [
        ("inspect", "dataset manifest (name, n, d, outlier %)"),
        ("run-pool", "train the native detector pool and write score matrices"),
        ("select", "run selection strategies on stored score matrices"),
    ]:
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("datasets", nargs="*", help="dataset CSV files")
    sp = sub.add_parser("import-scores", parents=[common], help="merge external score columns")
    sp.add_argument("path")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--family", default="OCSVM")
    sp = sub.add_parser("compare", parents=[common], help="Wilcoxon comparisons and summaries")
    sp.add_argument("--family-table", help="family-mean performance table to compare instead of a run")
    sub.add_parser("report", parents=[common], help="Markdown + CSV report bundle")
    return p


def config_from_args(args) -> RunConfig:
    overrides = {
        "seed": args.seed,
        "jobs": args.jobs,
        "out": args.out,
        "families": split_list(args.families) if args.families else None,
        "strategies": split_list(args.strategies) if args.strategies is not None else None,
        "metrics": split_list(args.metrics) if args.metrics else None,
        "datasets": list(args.datasets) if getattr(args, "datasets", None) else None,
    }
    if args.config:
        return load_config(args.config, **overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "inspect":
            cmd_inspect(cfg)
        elif args.command == "run-pool":
            cmd_run_pool(cfg)
        elif args.command == "import-scores":
            cmd_import_scores(cfg, args.path, args.dataset, args.family)
        elif args.command == "select":
            cmd_select(cfg)
        elif args.command == "compare":
            if args.family_table:
                cmd_compare_families(cfg, args.family_table)
            else:
                cmd_compare(cfg)
        elif args.command == "report":
            cmd_report(cfg)
    except UOMSError as exc:
        print(f"uoms: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
