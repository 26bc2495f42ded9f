"""Family-mean AP of the native pool on local ODDS files, next to reference values.

    python3 scripts/odds_smoke.py data/odds/wine.mat data/odds/glass.mat data/odds/vertebral.mat

Datasets are ``.mat`` files with ``X``/``y`` arrays or CSVs with a final
``label`` column. Reference values come from ``--table`` (rows named
``<dataset> (ODDS)``).
"""

import argparse
from pathlib import Path

from uoms.experiments import family_mean_ap
from uoms.io import dataset_name, read_csv, read_dataset

FAMILIES = {"KNN": "kNN", "LOF": "LOF", "HBOS": "HBOS", "IFOREST": "iForest"}
DEFAULT_TABLE = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "family_ap.csv"


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("datasets", nargs="+")
    ap.add_argument("--table", default=str(DEFAULT_TABLE))
    ap.add_argument("--tol", type=float, default=0.10)
    args = ap.parse_args()

    header, rows = read_csv(args.table)
    reference = {r[0].split(" ")[0].lower(): dict(zip(header, r)) for r in rows if r[0].endswith("(ODDS)")}
    worst = 0.0
    for path in args.datasets:
        name = dataset_name(path).lower()
        got = family_mean_ap(read_dataset(path), list(FAMILIES))
        for fam, col in FAMILIES.items():
            ref = reference.get(name, {}).get(col)
            line = f"{name:<12} {col:<8} {got[fam]:.3f}"
            if ref is not None:
                worst = max(worst, abs(got[fam] - float(ref)))
                line += f"  reference {float(ref):.3f}  diff {got[fam] - float(ref):+.3f}"
            print(line)
    print(f"\nmax |diff| = {worst:.3f} ({'within' if worst <= args.tol else 'outside'} {args.tol})")


if __name__ == "__main__":
    main()
