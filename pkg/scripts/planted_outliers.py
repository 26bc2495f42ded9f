"""Consensus strategies on planted-outlier blobs versus the pool best and Random.

    python3 scripts/planted_outliers.py --seeds 20 --out planted.csv
"""

import argparse

import numpy as np

from uoms.evaluation import wilcoxon_one_sided
from uoms.experiments import planted_run
from uoms.io import write_csv
from uoms.strategies import CONSENSUS


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--d", type=int, default=8)
    ap.add_argument("--out", default=None, help="optional CSV with one row per dataset")
    args = ap.parse_args()

    runs = []
    for seed in range(args.seeds):
        run = planted_run(seed, args.n, args.d)
        runs.append(run)
        worst = min(run.strategy_perf, key=run.strategy_perf.get)
        print(f"seed {seed:>3}: best {run.best:.3f}  random {run.random:.3f}  "
              f"worst strategy {worst} {run.strategy_perf[worst]:.3f}")

    rand = np.array([r.random for r in runs])
    print(f"\n{'strategy':<12} {'mean AP':>8} {'min AP/best':>12} {'p vs Random':>12}")
    for name in CONSENSUS:
        vals = np.array([r.strategy_perf[name] for r in runs])
        ratio = min(r.strategy_perf[name] / r.best for r in runs)
        p = wilcoxon_one_sided(vals, rand).pvalue
        print(f"{name:<12} {vals.mean():>8.3f} {ratio:>12.3f} {p:>12.2e}")
    print(f"{'Random':<12} {rand.mean():>8.3f}")

    if args.out:
        write_csv(args.out, ["dataset", "best", "random", *CONSENSUS],
                  ([r.name, r.best, r.random, *(r.strategy_perf[n] for n in CONSENSUS)] for r in runs))


if __name__ == "__main__":
    main()
