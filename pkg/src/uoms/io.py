"""CSV readers and writers for datasets, score matrices and result tables.

All numbers are written with 17 significant digits so that a file read back
reproduces the exact doubles, and every writer goes through a temporary
file plus an atomic rename so an interrupted run never leaves a truncated
CSV behind.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from uoms.core import ScoreMatrix
from uoms.detectors.pool import DatasetBundle
from uoms.errors import FormatError, IoError

LABEL_COLUMN = "label"
SAMPLE_ID = "sample_id"


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def dataset_name(path) -> str:
    return Path(path).stem


def _read_rows(path, what):
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"{what} {dataset_name(path)!r}: cannot read {path}: {exc.strerror}") from None
    rows = [r for r in rows if r]
    if not rows:
        raise FormatError(f"{what} {dataset_name(path)!r}: {path} is empty")
    return rows[0], rows[1:]


def _numeric(header, rows, path):
    width = len(header)
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(f"{path}: row {i + 2} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise FormatError(f"{path}: column {header[j]!r} row {i + 2}: not a number: {cell!r}") from None
    return out


def _read_mat(path, name):
    from scipy.io import loadmat

    try:
        mat = loadmat(path)
    except (OSError, ValueError) as exc:
        raise IoError(f"dataset {name!r}: cannot read {path}: {exc}") from None
    if "X" not in mat:
        raise FormatError(f"{path}: no 'X' array")
    X = np.asarray(mat["X"], dtype=float)
    if "y" not in mat:
        return DatasetBundle(name, X)
    y = np.asarray(mat["y"]).ravel()
    if not np.isin(y, (0, 1)).all():
        raise FormatError(f"{path}: array 'y' must hold 0/1 labels")
    return DatasetBundle(name, X, y.astype(int))


def read_dataset(path, name=None) -> DatasetBundle:
    """Dataset CSV: a header row, numeric features, optional final ``label`` column (1 = outlier).

    MATLAB files with arrays ``X`` and optional ``y`` (the ODDS layout) are read as well.
    """
    if Path(path).suffix.lower() == ".mat":
        return _read_mat(path, name or dataset_name(path))
    header, rows = _read_rows(path, "dataset")
    values = _numeric(header, rows, path)
    name = name or dataset_name(path)
    if header[-1].strip().lower() == LABEL_COLUMN:
        labels = values[:, -1]
        if not np.isin(labels, (0, 1)).all():
            raise FormatError(f"{path}: column {header[-1]!r} must hold 0/1 labels")
        return DatasetBundle(name, values[:, :-1], labels.astype(int))
    return DatasetBundle(name, values)


def write_csv(path, header, rows):
    """Atomically write ``rows`` under ``header``; floats use 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    os.replace(tmp, path)


def read_csv(path, what="table"):
    """Header and raw string rows of a CSV file."""
    return _read_rows(path, what)


def write_scores(path, matrix: ScoreMatrix):
    rows = ([i] + list(r) for i, r in enumerate(matrix.scores))
    write_csv(path, [SAMPLE_ID] + list(matrix.model_ids), rows)


def read_scores(path, dataset_id=None) -> ScoreMatrix:
    """Score CSV: ``sample_id`` then one column per model id."""
    header, rows = _read_rows(path, "score matrix")
    if header[0] != SAMPLE_ID:
        raise FormatError(f"{path}: first column must be {SAMPLE_ID!r}, got {header[0]!r}")
    dupes = {h for h in header if header.count(h) > 1}
    if dupes:
        raise FormatError(f"{path}: duplicate column {sorted(dupes)[0]!r}")
    values = _numeric(header, rows, path)
    return ScoreMatrix.from_array(dataset_id or dataset_name(path), values[:, 1:], header[1:])


def merge_scores(base: ScoreMatrix, extra: ScoreMatrix, order=None) -> ScoreMatrix:
    """Union of two score matrices of the same dataset; ``extra`` wins on shared ids.

    Columns follow ``order`` where given, then any remaining ids in their
    original order.
    """
    if base.n_models and extra.n_models and base.n_samples != extra.n_samples:
        raise FormatError(f"{extra.dataset_id}: {extra.n_samples} rows, existing matrix has {base.n_samples}")
    cols = {mid: base.scores[:, j] for j, mid in enumerate(base.model_ids)}
    cols.update({mid: extra.scores[:, j] for j, mid in enumerate(extra.model_ids)})
    ids = [m for m in (order or []) if m in cols]
    ids += [m for m in list(base.model_ids) + list(extra.model_ids) if m not in ids]
    ids = list(dict.fromkeys(ids))
    n = base.n_samples if base.n_models else extra.n_samples
    scores = np.column_stack([cols[m] for m in ids]) if ids else np.empty((n, 0))
    return ScoreMatrix(base.dataset_id, scores, ids)
