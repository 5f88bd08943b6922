"""Random permutations needed for full t-ordering coverage, next to the
sufficient count from required_permutations.

    python scripts/coverage_sim.py --n 600 --t 3 4 --trials 5
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys

from vtbound.permcover import required_permutations, simulate_to_coverage


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=600)
    ap.add_argument("--t", type=int, nargs="+", default=[3, 4])
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--subset-sample", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    w = csv.writer(sys.stdout)
    w.writerow(["n", "t", "required", "trials", "min", "median", "max"])
    for t in args.t:
        obs = [
            simulate_to_coverage(args.n, t, args.epsilon, args.seed + i, args.subset_sample)
            for i in range(args.trials)
        ]
        w.writerow([args.n, t, required_permutations(args.n, t, args.epsilon), args.trials,
                    min(obs), statistics.median(obs), max(obs)])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
