"""Mean executions until the first bug for PCT and PCTVB on the two-variable
program, as the buggy variable's share of accesses shrinks.

    python scripts/rare_variable_trend.py --trials 300 --out pctf.csv
"""

from __future__ import annotations

import argparse
import csv
import sys

from vtbound.corpus import pctf_pair
from vtbound.randomized import PCT, PCTVB, estimate_access_profile, executions_to_bug

RATIOS = [1, 0.5, 0.2, 0.1, 0.05]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--max-runs", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out)
    w.writerow(["ratio", "k_x", "k_y", "pct_mean", "pctvb_mean", "pctvb_over_pct"])
    for r in RATIOS:
        prog = pctf_pair(r)
        k = estimate_access_profile(prog).k
        common = dict(max_runs=args.max_runs, trials=args.trials, seed=args.seed,
                      workers=args.workers)
        a = executions_to_bug(prog, PCT(d=2), **common)
        b = executions_to_bug(prog, PCTVB(d=2, v=1), **common)
        rel = b.mean / a.mean if a.mean and b.mean else float("nan")
        w.writerow([r, k["x"], k["y"], f"{a.mean:.2f}", f"{b.mean:.2f}", f"{rel:.3f}"])
        out.flush()


if __name__ == "__main__":
    main()
