"""Baselines and per-dataset winners from a family-mean AP table.

    python3 scripts/family_fixture.py tests/fixtures/family_ap.csv --out runs/fixture
"""

import argparse

from uoms.cli import cmd_compare_families
from uoms.config import RunConfig
from uoms.io import read_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("table")
    ap.add_argument("--out", default="runs/family-fixture")
    args = ap.parse_args()

    summary, winners = cmd_compare_families(RunConfig(out=args.out, metrics=["ap"]), args.table)
    header, rows = read_csv(summary)
    print(f"{'method':<12} {'mean':>6} {'std':>6} {'p vs Random':>12}")
    for r in rows:
        print(f"{r[0]:<12} {float(r[4]):>6.3f} {float(r[5]):>6.3f} {float(r[1]):>12.2e}")
    _, rows = read_csv(winners)
    missed = [r for r in rows if r[3] == "0"]
    print(f"\nbold winner reproduced on {len(rows) - len(missed)}/{len(rows)} datasets")
    for r in missed:
        print(f"  {r[0]}: bold {r[2]}, computed {r[1]}")


if __name__ == "__main__":
    main()
