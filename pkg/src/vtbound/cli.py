"""Command-line front end.

Exit status: 0 when the command completed without finding a bug, 1 when a
bug was found (or replayed), 2 on usage errors. Reports are plain text with
a fixed field order; timing fields come last.
"""

from __future__ import annotations

import argparse
import sys
import time
from collections.abc import Sequence

from vtbound import corpus
from vtbound.explore import (
    ExplorationConfig,
    ExplorationReport,
    NotFound,
    classify_bug_detail,
    explore_dynamic_vb,
    explore_var_sets,
)
from vtbound.permcover import required_permutations, simulate_to_coverage
from vtbound.randomized import (
    PCT,
    PCTVB,
    Exhaustive,
    estimate_access_profile,
    executions_to_bug,
    jensen_compare,
)
from vtbound.scheduler import ReplayDivergence, Schedule, replay
from vtbound.testkit import ArrayMode, ProgramDef


class UsageError(Exception):
    pass


def load_program(name: str, array_mode: str | None = None) -> ProgramDef:
    try:
        prog = corpus.program_by_name(name)
    except (KeyError, corpus.Unsupported) as e:
        raise UsageError(f"unknown program {name!r}: {e}") from None
    if array_mode is not None:
        prog.array_mode = ArrayMode(array_mode)
    return prog


def _echo(args: argparse.Namespace, keys: Sequence[str]) -> list[str]:
    lines = [f"command: {args.command}"]
    for k in keys:
        lines.append(f"{k.replace('_', '-')}: {getattr(args, k)}")
    return lines


def _exploration_lines(rep: ExplorationReport) -> list[str]:
    lines = [
        f"schedules-executed: {rep.schedules_executed}",
        f"schedules-pruned: {rep.schedules_pruned}",
        f"schedules-generated: {rep.generated}",
        f"variable-sets: {rep.var_sets}",
        f"budget-exhausted: {str(rep.budget_exhausted).lower()}",
    ]
    for c in sorted(rep.per_bound):
        executed, pruned = rep.per_bound[c]
        lines.append(f"bound {c}: executed {executed} pruned {pruned}")
    lines.append(f"bugs: {len(rep.bugs)}")
    for bug in sorted(rep.bugs.values(), key=lambda b: b.bug_id):
        c, v, t = bug.signature
        lines += [
            f"bug: {bug.bug_id}",
            f"  signature: ({c},{v},{t})",
            f"  variable-set: {','.join(bug.var_set)}",
            f"  first-execution: {bug.execution}",
        ]
        lines.append(bug.schedule.dumps().rstrip("\n"))
    return lines


def cmd_explore(args: argparse.Namespace) -> tuple[list[str], int]:
    prog = load_program(args.program, args.array_mode)
    cfg = ExplorationConfig(
        c_max=args.c, v=args.v, t=args.t, l=args.l, epsilon=args.epsilon,
        seed=args.seed, prune=args.prune,
    )
    if args.dynamic_vb:
        rep = explore_dynamic_vb(prog, cfg, budget=args.max_runs)
    else:
        rep = explore_var_sets(prog, cfg, budget=args.max_runs)
    lines = _echo(args, ["program", "c", "v", "t", "l", "epsilon", "seed", "prune", "dynamic_vb"])
    lines += _exploration_lines(rep)
    return lines, int(bool(rep.bugs))


def cmd_classify(args: argparse.Namespace) -> tuple[list[str], int]:
    prog = load_program(args.program, args.array_mode)
    try:
        c_lim, v_lim, t_lim = (int(x) for x in args.limits.split(","))
    except ValueError:
        raise UsageError(f"--limits expects c,v,t, got {args.limits!r}") from None
    cfg = ExplorationConfig(l=args.l, epsilon=args.epsilon, seed=args.seed)
    lines = _echo(args, ["program", "limits", "epsilon", "seed"])
    try:
        res = classify_bug_detail(prog, c_lim, v_lim, t_lim, cfg)
    except NotFound:
        lines.append("signature: not-found")
        return lines, 0
    c, v, t = res.signature
    lines.append(f"signature: ({c},{v},{t})")
    witness = min(
        (b for b in res.report.bugs.values() if b.signature == res.signature),
        key=lambda b: b.bug_id,
    )
    lines.append(f"bug: {witness.bug_id}")
    lines.append(witness.schedule.dumps().rstrip("\n"))
    return lines, 1


def cmd_random(args: argparse.Namespace) -> tuple[list[str], int]:
    prog = load_program(args.program, args.array_mode)
    if args.strategy == "pct":
        strategy = PCT(args.d)
    elif args.strategy == "pctvb":
        var_set = tuple(args.vars.split(",")) if args.vars else None
        strategy = PCTVB(args.d, args.v, var_set)
    else:
        strategy = Exhaustive(args.c, args.v, args.t, bounded=args.strategy == "exhaustive")
    stats = executions_to_bug(
        prog, strategy, max_runs=args.max_runs, trials=args.trials, seed=args.seed,
        workers=args.workers,
    )
    lines = _echo(args, ["program", "strategy", "d", "c", "v", "t", "trials", "max_runs", "seed"])
    mean = "timed-out" if stats.mean is None else f"{stats.mean:.3f}"
    lines += [
        f"mean-executions: {mean}",
        f"found: {len(stats.found)}",
        f"timed-out: {stats.timed_out}",
    ]
    lines += stats.rows()
    return lines, int(bool(stats.found))


def cmd_permcover(args: argparse.Namespace) -> tuple[list[str], int]:
    lines = _echo(args, ["n", "t", "epsilon", "seed", "trials", "subset_sample"])
    lines.append(f"required: {required_permutations(args.n, args.t, args.epsilon)}")
    lines.append("trial,observed")
    for i in range(args.trials):
        p = simulate_to_coverage(args.n, args.t, args.epsilon, args.seed + i, args.subset_sample)
        lines.append(f"{i},{p}")
    return lines, 0


def cmd_profile(args: argparse.Namespace) -> tuple[list[str], int]:
    prog = load_program(args.program, args.array_mode)
    hist = corpus.profile_access_frequencies(prog, args.runs, args.seed)
    prof = estimate_access_profile(prog, args.runs, args.seed)
    lines = _echo(args, ["program", "runs", "seed"])
    lines.append("site,mean,max")
    for site, mean in hist.means.items():
        lines.append(f"{site},{mean:g},{prof.k.get(site, 0)}")
    lines.append("bucket,sites")
    lines += [f"{b},{n}" for b, n in hist.buckets.items()]
    if any(prof.k.values()):
        e1, e2 = jensen_compare(prof)
        lines.append(f"E1: {e1:.6g}")
        lines.append(f"E2: {e2:.6g}")
    return lines, 0


def cmd_replay(args: argparse.Namespace) -> tuple[list[str], int]:
    try:
        with open(args.schedule) as f:
            sched = Schedule.loads(f.read())
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read schedule: {e}") from None
    prog = load_program(sched.program, args.array_mode)
    lines = _echo(args, ["schedule"])
    lines.append(f"program: {sched.program}")
    try:
        result = replay(prog, sched)
    except ReplayDivergence as e:
        lines.append(f"divergence: {e}")
        return lines, 2
    lines.append(f"steps: {len(result.trace)}")
    lines.append(f"bug: {result.bug_id or 'none'}")
    if result.buggy:
        c, v, t = result.signature
        lines.append(f"signature: ({c},{v},{t})")
    lines.append("trace:")
    lines += ["  " + e.line() for e in result.trace]
    return lines, int(result.buggy)


def cmd_catalog(args: argparse.Namespace) -> tuple[list[str], int]:
    lines = ["name,expected,note"]
    for e in corpus.corpus_catalog():
        sig = "bug-free" if e.expected is None else "({},{},{})".format(*e.expected)
        lines.append(f"{e.name},{sig},{e.note}")
    return lines, 0


COMMANDS = {
    "explore": cmd_explore,
    "classify": cmd_classify,
    "random": cmd_random,
    "permcover": cmd_permcover,
    "profile": cmd_profile,
    "replay": cmd_replay,
    "catalog": cmd_catalog,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vtbound", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, program: bool = True) -> None:
        if program:
            p.add_argument(
                "program", help="catalog name, planted:c,v,t[:Q] or pctf:<ratio>"
            )
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="also write the report here")
        p.add_argument("--array-mode", choices=[m.value for m in ArrayMode])

    def bounds(p: argparse.ArgumentParser, c: int, v: int, t: int) -> None:
        p.add_argument("--c", type=int, default=c, help="context bound")
        p.add_argument("--v", type=int, default=v, help="variable bound")
        p.add_argument("--t", type=int, default=t, help="thread bound")
        p.add_argument("--l", type=int, default=3, help="loop-iteration bound")
        p.add_argument("--epsilon", type=float, default=0.01)

    p = sub.add_parser("explore", help="exhaustive bounded exploration")
    common(p)
    bounds(p, 2, 1, 2)
    p.add_argument("--prune", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--dynamic-vb", action="store_true")
    p.add_argument("--max-runs", type=int, default=None, help="execution budget")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("classify", help="minimal (c,v,t) of a program's bugs")
    common(p)
    p.add_argument("--limits", default="2,2,3", help="c,v,t limits")
    p.add_argument("--l", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("random", help="executions until the first bug, per trial")
    common(p)
    bounds(p, 1, 1, 2)
    p.add_argument(
        "--strategy", choices=["pct", "pctvb", "exhaustive", "unbounded"], default="pct"
    )
    p.add_argument("--d", type=int, default=2, help="bug depth")
    p.add_argument("--vars", help="comma-separated PCTVB variable set")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--max-runs", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("permcover", help="random permutations until full t-order coverage")
    common(p, program=False)
    p.add_argument("--n", type=int, default=600)
    p.add_argument("--t", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--subset-sample", type=int, default=None)

    p = sub.add_parser("profile", help="per-variable access frequencies")
    common(p)
    p.add_argument("--runs", type=int, default=10)

    p = sub.add_parser("replay", help="replay a recorded schedule or report")
    p.add_argument("schedule")
    p.add_argument("--out")
    p.add_argument("--array-mode", choices=[m.value for m in ArrayMode])

    p = sub.add_parser("catalog", help="list corpus programs")
    p.add_argument("--out")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    start = time.perf_counter()
    try:
        lines, status = COMMANDS[args.command](args)
    except (UsageError, ValueError) as e:
        print(f"vtbound: error: {e}", file=sys.stderr)
        return 2
    lines.append(f"elapsed-seconds: {time.perf_counter() - start:.3f}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if getattr(args, "out", None):
        with open(args.out, "w") as f:
            f.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
