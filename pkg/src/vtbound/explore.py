"""Iterative context bounding with variable and thread bounding.

For one set of tracked variables, every priority order from
:func:`gen_priority_orders` is run without preemptions first. Each run
enqueues, for the next bound, one work item per eligible preemption point
(an access to a tracked variable, or a thread's fake first access). Items at
bound ``c`` all run before any item at ``c + 1``.

State is never stored: a work item is the list of steps after which the run
preempts, and running it re-executes the program from scratch. An item is
pruned when an earlier item reached a state with the same happens-before
graph, the same relative order of all remaining priorities and the same
preemption history; its whole subtree would repeat that item's subtree.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from vtbound.permcover import CoverageState, random_permutation
from vtbound.scheduler import (
    ExecutionResult,
    PreemptionPoint,
    PriorityOrder,
    PriorityPreemptor,
    RoundRobin,
    Schedule,
    SchedulerState,
    TrackedSet,
    execute,
)
from vtbound.testkit import ProgramDef, VarId, VarPattern


class NotFound(Exception):
    """No bug within the classification limits."""


@dataclass(frozen=True)
class ExplorationConfig:
    c_max: int = 2
    v: int = 1
    t: int = 2
    l: int = 3
    epsilon: float = 0.01
    seed: int = 0
    prune: bool = True
    shared_first: bool = True

    def __post_init__(self) -> None:
        if self.c_max < 0:
            raise ValueError("c_max must be >= 0")
        if self.v < 0:
            raise ValueError("v must be >= 0")
        if self.t < 2:
            raise ValueError("t must be >= 2")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must be in (0, 1)")


@dataclass(frozen=True)
class WorkItem:
    points: tuple[int, ...]  # steps after which this run preempts
    prio: PriorityOrder

    @property
    def bound(self) -> int:
        return len(self.points)


@dataclass
class BugReport:
    bug_id: str
    signature: tuple[int, int, int]
    schedule: Schedule
    var_set: tuple[str, ...]
    execution: int  # 1-based index of the first run that hit it


@dataclass
class ExplorationReport:
    schedules_executed: int = 0
    schedules_pruned: int = 0
    bugs: dict[str, BugReport] = field(default_factory=dict)
    per_bound: dict[int, list[int]] = field(default_factory=dict)  # c -> [executed, pruned]
    var_sets: int = 0
    first_bug_at: int | None = None
    budget_exhausted: bool = False
    # when a list is supplied, (perm, points) of every executed schedule is appended
    executed_log: list | None = None

    @property
    def generated(self) -> int:
        return self.schedules_executed + self.schedules_pruned

    @property
    def bug_ids(self) -> frozenset[str]:
        return frozenset(self.bugs)

    def _count(self, bound: int, executed: int = 0, pruned: int = 0) -> None:
        row = self.per_bound.setdefault(bound, [0, 0])
        row[0] += executed
        row[1] += pruned
        self.schedules_executed += executed
        self.schedules_pruned += pruned

    def record(self, result: ExecutionResult, var_set: tuple[str, ...]) -> None:
        if self.first_bug_at is None:
            self.first_bug_at = self.schedules_executed
        bug_id = result.bug_id
        sig = result.signature
        old = self.bugs.get(bug_id)
        if old is None or sig < old.signature:
            execution = self.schedules_executed if old is None else old.execution
            self.bugs[bug_id] = BugReport(bug_id, sig, result.schedule, var_set, execution)

    def min_signature(self, t_limit: int | None = None) -> tuple[int, int, int] | None:
        sigs = [b.signature for b in self.bugs.values()]
        if t_limit is not None:
            sigs = [s for s in sigs if s[2] <= t_limit]
        return min(sigs, default=None)


# ---------------------------------------------------------------------------
# Variable sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarInfo:
    var: VarId
    shared: bool
    accesses: int


def discover_variables(prog: ProgramDef, l: int = 1 << 30) -> list[VarInfo]:
    """Variables seen in preparatory runs, in order of first access.

    Runs round-robin from every starting thread plus the two extreme priority
    orders. A variable is shared if two threads touched it in one run.
    """
    n = prog.n
    runs = [execute(prog, RoundRobin(s)) for s in range(n)]
    for perm in (tuple(range(n, 0, -1)), tuple(range(1, n + 1))):
        runs.append(execute(prog, PriorityPreemptor(PriorityOrder(perm, n))))
    order: dict[VarId, None] = {}
    shared: set[VarId] = set()
    counts: dict[VarId, int] = {}
    for r in runs:
        users: dict[VarId, set[int]] = {}
        per_run: dict[VarId, int] = {}
        for e in r.trace:
            if e.var is None or e.var.loop_iter > l:
                continue
            order.setdefault(e.var)
            users.setdefault(e.var, set()).add(e.thread)
            per_run[e.var] = per_run.get(e.var, 0) + 1
        shared |= {v for v, ts in users.items() if len(ts) > 1}
        for v, k in per_run.items():
            counts[v] = max(counts.get(v, 0), k)
    return [VarInfo(v, v in shared, counts[v]) for v in order]


def enumerate_var_sets(
    all_sites: Sequence[VarInfo] | Sequence[tuple[object, bool]],
    v: int,
    shared_first: bool = True,
) -> list[tuple]:
    """All v-sized subsets, each once; all-shared subsets first when asked."""
    items = [(s.var, s.shared) if isinstance(s, VarInfo) else tuple(s) for s in all_sites]
    if v > len(items):
        raise ValueError(f"v={v} exceeds the {len(items)} known variables")
    combos = list(itertools.combinations(range(len(items)), v))
    if shared_first:
        combos.sort(key=lambda idx: sum(not items[i][1] for i in idx))
    return [tuple(items[i][0] for i in idx) for idx in combos]


# ---------------------------------------------------------------------------
# Priority orders
# ---------------------------------------------------------------------------


def priority_order_count(n: int, c: int, t: int, epsilon: float) -> int:
    return math.ceil(
        math.factorial(t + c + 1) * (math.log((n + c) * (t + c)) + math.log(1 / epsilon))
    )


def gen_priority_orders(
    n: int, c: int, t: int, epsilon: float = 0.01, seed: int = 0
) -> list[PriorityOrder]:
    """Distinct random orders over n + c fragments covering all (t+c)-orderings.

    When the formula asks for at least (n+c)! permutations, every permutation
    is returned (in seeded random order). Otherwise duplicates are dropped and
    coverage is checked; missing orderings trigger further draws.
    """
    m = n + c
    rng = np.random.default_rng(seed)
    count = priority_order_count(n, c, t, epsilon)
    tt = min(t + c, m)
    if math.factorial(m) <= count or tt == m:
        perms = list(itertools.permutations(range(m)))
        order = rng.permutation(len(perms))
        return [PriorityOrder(tuple(x + 1 for x in perms[i]), n) for i in order]

    seen: dict[tuple[int, ...], None] = {}
    for _ in range(count):
        seen.setdefault(tuple(int(x) for x in random_permutation(m, rng)))
    state = CoverageState.new(m, tt, seed=seed)
    for p in seen:
        state.update(p)
    extra = 0
    while not state.complete:
        p = tuple(int(x) for x in random_permutation(m, rng))
        if p not in seen:
            seen[p] = None
            state.update(p)
        extra += 1
        if extra > 100 * count:
            raise RuntimeError("priority orders failed to reach coverage")
    return [PriorityOrder(tuple(x + 1 for x in p), n) for p in seen]


def all_priority_orders(n: int, c: int, seed: int | None = None) -> Iterator[PriorityOrder]:
    """Every order over n + c fragments, lazily; no thread bounding.

    Without a seed the identity order comes first and the rest follow
    lexicographically. With a seed the orders come in random order: a shuffled
    list when (n+c)! is small, otherwise a stream of distinct random draws.
    """
    m = n + c
    if seed is None:
        for p in itertools.permutations(range(m, 0, -1)):
            yield PriorityOrder(p, n)
        return
    rng = np.random.default_rng(seed)
    total = math.factorial(m)
    if total <= SHUFFLE_LIMIT:
        perms = list(itertools.permutations(range(1, m + 1)))
        for i in rng.permutation(total):
            yield PriorityOrder(perms[i], n)
        return
    seen: set[tuple[int, ...]] = set()
    while len(seen) < total:
        p = tuple(int(x) + 1 for x in rng.permutation(m))
        if p not in seen:
            seen.add(p)
            yield PriorityOrder(p, n)


SHUFFLE_LIMIT = 40_320  # 8!


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def _ranking(state: SchedulerState, order: PriorityOrder, point: PreemptionPoint) -> tuple:
    """Relative order of every priority that can still influence scheduling."""
    vals = []
    for th in state.threads:
        if not th.halted:
            p = point.priority if th.tid == point.thread else th.priority
            vals.append((p, "T", th.tid))
    for tid in range(len(state.threads), order.n):
        vals.append((order.thread_priority(tid), "U", tid))
    for i in range(point.ordinal + 1, order.c + 1):
        vals.append((order.preemption_priority(i), "P", i))
    vals.sort(reverse=True)
    return tuple((kind, x) for _, kind, x in vals)


@dataclass
class _Run:
    """What one execution of a work item left behind, independent of the variable set."""

    bug: ExecutionResult | None
    fixed_vars: tuple  # variables of the item's own preemptions, in order
    candidates: list | None  # [(step, var, key)] for every eligible later point


class _Search:
    def __init__(
        self,
        prog: ProgramDef,
        tracked: Sequence[VarPattern] | None,
        cfg: ExplorationConfig,
        report: ExplorationReport,
        dynamic_v: int | None,
        budget: int | None,
        stop_at_first: bool,
        var_label: tuple[str, ...],
        memo: dict | None,
    ) -> None:
        self.prog = prog
        self.tracked = TrackedSet(tracked, cfg.l)
        self.all_vars = TrackedSet(None, cfg.l)
        self.cfg = cfg
        self.report = report
        self.dynamic_v = dynamic_v
        self.budget = budget
        self.stop_at_first = stop_at_first
        self.var_label = var_label
        self.memo = memo
        self.seen: set = set()

    def execute_item(self, item: WorkItem, expand: bool) -> tuple[_Run, ExecutionResult]:
        # candidates are gathered at every variable's accesses; callers filter
        fixed = set(item.points)
        last = item.points[-1] if item.points else -1
        cands: list = []

        def decide(point: PreemptionPoint, state: SchedulerState) -> bool:
            return point.step in fixed

        def on_point(point: PreemptionPoint, state: SchedulerState) -> None:
            if not expand or point.step <= last:
                return
            done = state.preemptions
            key = (
                state.prefix_key(),
                _ranking(state, item.prio, point),
                frozenset(p.thread for p in done) | frozenset(
                    p.switched_to for p in done if p.switched_to is not None
                ) | {point.thread},
                frozenset(p.var for p in done) | {point.var},
            )
            cands.append((point.step, point.var, key))

        policy = PriorityPreemptor(item.prio, decide, self.all_vars, on_point)
        result = execute(self.prog, policy, track_key=expand)
        if policy.used != len(item.points):
            raise RuntimeError(f"work item {item.points} did not replay its preemptions")
        run = _Run(
            result if result.buggy else None,
            tuple(p.var for p in result.preemptions),
            cands if expand else None,
        )
        return run, result

    def children(self, item: WorkItem, run: _Run) -> list:
        dyn = self.dynamic_v
        allowed = None
        if dyn is not None and item.bound >= dyn:
            allowed = {v for v in run.fixed_vars[:dyn] if v is not None}
        out = []
        for step, var, key in run.candidates:
            if var is not None and var not in self.tracked:
                continue
            if allowed is not None and var not in allowed:
                continue
            out.append((item.points + (step,), key))
        return out

    def search(self, roots: Iterable[PriorityOrder]) -> bool:
        """Returns False when the search stopped early (budget or first bug)."""
        cfg = self.cfg
        rep = self.report
        memo = self.memo
        queue: Iterable[WorkItem] = (WorkItem((), o) for o in roots)
        for bound in range(cfg.c_max + 1):
            next_queue: list[WorkItem] = []
            expand = bound < cfg.c_max
            for item in queue:
                ident = (item.prio.perm, item.points)
                run = memo.get(ident) if memo is not None else None
                if run is not None and (run.candidates is not None or not expand):
                    # same schedule already ran under another variable set
                    rep._count(bound, pruned=1)
                else:
                    if self.budget is not None and rep.schedules_executed >= self.budget:
                        rep.budget_exhausted = True
                        return False
                    run, result = self.execute_item(item, expand)
                    rep._count(bound, executed=1)
                    if rep.executed_log is not None:
                        rep.executed_log.append(ident)
                    if memo is not None:
                        memo[ident] = run
                if run.bug is not None:
                    rep.record(run.bug, self.var_label)
                    if self.stop_at_first:
                        return False
                if not expand:
                    continue
                for points, key in self.children(item, run):
                    if cfg.prune:
                        if key in self.seen:
                            rep._count(bound + 1, pruned=1)
                            continue
                        self.seen.add(key)
                    next_queue.append(WorkItem(points, item.prio))
            if not next_queue:
                break
            queue = next_queue
        return True


def explore(
    prog: ProgramDef,
    tracked: Sequence[VarPattern | VarId] | None,
    cfg: ExplorationConfig,
    *,
    orders: Iterable[PriorityOrder] | None = None,
    report: ExplorationReport | None = None,
    budget: int | None = None,
    stop_at_first: bool = False,
    dynamic_v: int | None = None,
    memo: dict | None = None,
) -> ExplorationReport:
    """Explore one tracked-variable set; ``tracked=None`` tracks every variable.

    ``memo`` shares executed schedules between calls for different variable
    sets of the same program, configuration and orders; a schedule found there
    is counted as pruned instead of being run again.
    """
    if tracked is not None:
        label = tuple(str(x) for x in tracked)
        tracked = [VarPattern.of(x) if isinstance(x, VarId) else x for x in tracked]
    else:
        label = ("*",)
    if orders is None:
        orders = gen_priority_orders(prog.n, cfg.c_max, cfg.t, cfg.epsilon, cfg.seed)
    rep = report if report is not None else ExplorationReport()
    rep.var_sets += 1
    if not cfg.prune:
        memo = None
    _Search(prog, tracked, cfg, rep, dynamic_v, budget, stop_at_first, label, memo).search(orders)
    return rep


def explore_var_sets(
    prog: ProgramDef,
    cfg: ExplorationConfig,
    *,
    budget: int | None = None,
    stop_at_first: bool = False,
) -> ExplorationReport:
    """Run :func:`explore` over every v-sized set of discovered variables."""
    infos = discover_variables(prog, cfg.l)
    orders = gen_priority_orders(prog.n, cfg.c_max, cfg.t, cfg.epsilon, cfg.seed)
    rep = ExplorationReport()
    memo: dict = {}
    for vs in enumerate_var_sets(infos, min(cfg.v, len(infos)), cfg.shared_first):
        explore(prog, list(vs), cfg, orders=orders, report=rep, budget=budget,
                stop_at_first=stop_at_first, memo=memo)
        if rep.budget_exhausted or (stop_at_first and rep.bugs):
            break
    return rep


def explore_dynamic_vb(
    prog: ProgramDef,
    cfg: ExplorationConfig,
    *,
    orders: Iterable[PriorityOrder] | None = None,
    report: ExplorationReport | None = None,
    budget: int | None = None,
    stop_at_first: bool = False,
) -> ExplorationReport:
    """All variables are candidates; preemptions past the v-th must reuse a variable
    of one of the first v preemptions. With v >= c_max this is plain :func:`explore`."""
    if cfg.v < 1:
        raise ValueError("dynamic variable bounding needs v >= 1")
    dyn = cfg.v if cfg.v < cfg.c_max else None
    return explore(prog, None, cfg, orders=orders, report=report, budget=budget,
                   stop_at_first=stop_at_first, dynamic_v=dyn)


@dataclass(frozen=True)
class Classification:
    signature: tuple[int, int, int]
    report: ExplorationReport


def classify_bug(
    prog: ProgramDef,
    c_limit: int = 2,
    v_limit: int = 2,
    t_limit: int = 3,
    cfg: ExplorationConfig | None = None,
) -> tuple[int, int, int]:
    """Lexicographically smallest (c, v, t) at which any bug shows up.

    Raises :class:`NotFound` when no bug exists within the limits.
    """
    return classify_bug_detail(prog, c_limit, v_limit, t_limit, cfg).signature


def classify_bug_detail(
    prog: ProgramDef,
    c_limit: int = 2,
    v_limit: int = 2,
    t_limit: int = 3,
    cfg: ExplorationConfig | None = None,
) -> Classification:
    base = cfg or ExplorationConfig()
    infos = discover_variables(prog, base.l)
    for c in range(c_limit + 1):
        level = replace(base, c_max=c, t=max(2, t_limit))
        orders = gen_priority_orders(prog.n, c, level.t, level.epsilon, level.seed)
        for v in range(min(c, v_limit, len(infos)) + 1):
            rep = ExplorationReport()
            memo: dict = {}
            for vs in enumerate_var_sets(infos, v, level.shared_first):
                explore(prog, list(vs), replace(level, v=v), orders=orders, report=rep, memo=memo)
            sig = rep.min_signature(t_limit)
            if sig is not None:
                return Classification(sig, rep)
    raise NotFound(f"{prog.name}: no bug within c<={c_limit}, v<={v_limit}, t<={t_limit}")
