"""Executions until the first bug for planted bugs, with and without (v, t) bounding.

    python scripts/planted_budget.py --trials 10 --max-runs 50000
"""

from __future__ import annotations

import argparse
import csv
import sys

from vtbound.corpus import make_planted
from vtbound.randomized import Exhaustive, executions_to_bug


def rows(trials: int, max_runs: int, seed: int, extra_threads: int):
    cases = [((0, 0, t), 0) for t in (2, 3, 4)] + [((1, 1, 2), extra_threads)]
    for (c, v, t), extra in cases:
        prog = make_planted(c, v, t, extra_threads=extra)
        for strat in (Exhaustive(c, v, t), Exhaustive(c, bounded=False)):
            n_trials = trials if strat.bounded else max(1, trials // 5)
            st = executions_to_bug(prog, strat, max_runs=max_runs, trials=n_trials, seed=seed)
            mean = "TimedOut" if st.mean is None else f"{st.mean:.1f}"
            yield [prog.name, prog.n, strat.label, n_trials, mean, st.timed_out]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--max-runs", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--extra-threads", type=int, default=6)
    args = ap.parse_args()

    w = csv.writer(sys.stdout)
    w.writerow(["program", "threads", "strategy", "trials", "mean_executions", "timed_out"])
    for row in rows(args.trials, args.max_runs, args.seed, args.extra_threads):
        w.writerow(row)
        sys.stdout.flush()


if __name__ == "__main__":
    main()
