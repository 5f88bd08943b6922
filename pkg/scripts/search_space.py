"""Schedules executed with one-variable bounding versus tracking every
variable, on the (2,1,2) planted bug as the number of variables grows.

    python scripts/search_space.py --q 1 5 10 20
"""

from __future__ import annotations

import argparse
import csv
import sys

from vtbound.corpus import make_planted
from vtbound.explore import ExplorationConfig, explore, explore_var_sets


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=int, nargs="+", default=[1, 5, 10, 20])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = ExplorationConfig(c_max=2, v=1, t=2, seed=args.seed)
    w = csv.writer(sys.stdout)
    w.writerow(["Q", "bounded_executed", "bounded_pruned", "unbounded_executed", "ratio"])
    for q in args.q:
        prog = make_planted(2, 1, 2, decoys=q - 1)
        b = explore_var_sets(prog, cfg)
        u = explore(prog, None, cfg)
        ratio = u.schedules_executed / b.schedules_executed
        w.writerow([q, b.schedules_executed, b.schedules_pruned, u.schedules_executed,
                    f"{ratio:.2f}"])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
