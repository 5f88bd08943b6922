"""Deterministic cooperative executor for modeled programs.

Threads run one action at a time under strict priority scheduling: the
highest-priority enabled thread always runs. A *policy* supplies initial
priorities and may change the running thread's priority after any step; a
change that immediately hands the CPU to another thread while the running
thread is still enabled is a preemption and counts toward ``c_used``. Switches
caused by spawning, unblocking or yield-starvation handling are not counted.

Every executed step is recorded as a decision, so any run can be serialized
with :meth:`Schedule.dumps` and replayed bit-for-bit with :func:`replay`.
"""

from __future__ import annotations

import random
from collections import Counter
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any

from vtbound import hbgraph
from vtbound.testkit import (
    Action,
    AllocCounters,
    Alloc,
    ArrayMode,
    Assert,
    Halt,
    Join,
    Lock,
    ModelError,
    Notify,
    ProgramDef,
    Read,
    Spawn,
    ThreadCtx,
    Unlock,
    Update,
    VarId,
    VarPattern,
    Wait,
    Write,
    Yield,
    alloc_var,
    resolve_array_var,
)

MAX_STEPS = 10_000
YIELD_THRESHOLD = 100


class Deadlock(Exception):
    pass


class ProgramEnd(Exception):
    pass


class ReplayDivergence(Exception):
    pass


class ContractViolation(Exception):
    pass


class Status(Enum):
    RUNNABLE = "runnable"
    BLOCKED = "blocked"
    HALTED = "halted"


class _Start(Action):
    """Fake first access of every thread: a preemption point before any real access."""

    __slots__ = ()
    kind = "ST"


START = _Start()


@dataclass(frozen=True, slots=True)
class _Reacquire(Action):
    """Mutex re-acquisition a waiter performs after being notified."""

    var: VarId
    kind = "L"


@dataclass(frozen=True)
class PriorityOrder:
    """Permutation of 1..n+c: thread priorities first, then one per preemption."""

    perm: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        if sorted(self.perm) != list(range(1, len(self.perm) + 1)):
            raise ValueError(f"not a permutation of 1..{len(self.perm)}: {self.perm}")
        if self.n > len(self.perm):
            raise ValueError("permutation shorter than the thread count")

    @classmethod
    def identity(cls, n: int, c: int = 0) -> PriorityOrder:
        return cls(tuple(range(n + c, 0, -1)), n)

    @property
    def c(self) -> int:
        return len(self.perm) - self.n

    def thread_priority(self, tid: int) -> int:
        return self.perm[tid]

    def preemption_priority(self, i: int) -> int:
        """Priority given to the running thread at the i-th preemption (1-based)."""
        return self.perm[self.n + i - 1]


# ---------------------------------------------------------------------------
# Trace and results
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class TraceEntry:
    step: int
    thread: int
    kind: str
    var: VarId | None
    value: Any
    accesses: tuple  # ((key, is_write), ...) for happens-before
    label: str = ""

    def line(self) -> str:
        var = "-" if self.var is None else str(self.var)
        return f"{self.step} T{self.thread} {self.kind} {var} {self.value!r} {self.label}".rstrip()


@dataclass(frozen=True, slots=True)
class Decision:
    step: int
    thread: int
    preempt: bool
    priority: int


@dataclass
class Schedule:
    """Recorded decisions of one run; replayable against the same program."""

    program: str
    priorities: tuple[int, ...]
    decisions: list[Decision] = field(default_factory=list)

    HEADER = "schedule v1"

    def dumps(self) -> str:
        lines = [
            self.HEADER,
            f"program {self.program}",
            "priorities " + " ".join(str(p) for p in self.priorities),
            f"decisions {len(self.decisions)}",
        ]
        lines += [f"{d.step} {d.thread} {int(d.preempt)} {d.priority}" for d in self.decisions]
        lines.append("end")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> Schedule:
        """Parse the first schedule block in ``text`` (a schedule file or a report)."""
        lines = [ln.strip() for ln in text.splitlines()]
        try:
            start = lines.index(cls.HEADER)
        except ValueError:
            raise ValueError("no schedule block found") from None
        it = iter(lines[start + 1 :])
        program = _field(next(it), "program")
        priorities = tuple(int(p) for p in _field(next(it), "priorities").split())
        count = int(_field(next(it), "decisions"))
        decisions = []
        for _ in range(count):
            step, thread, preempt, prio = next(it).split()
            decisions.append(Decision(int(step), int(thread), preempt == "1", int(prio)))
        if next(it) != "end":
            raise ValueError("schedule block not terminated by 'end'")
        return cls(program, priorities, decisions)


def _field(line: str, name: str) -> str:
    key, _, rest = line.partition(" ")
    if key != name:
        raise ValueError(f"expected '{name}' line, got {line!r}")
    return rest


@dataclass(frozen=True, slots=True)
class Preemption:
    step: int
    thread: int
    var: VarId | None  # None for the fake first access
    priority: int
    switched_to: int | None = None


@dataclass
class ExecutionResult:
    program: str
    trace: list[TraceEntry]
    schedule: Schedule
    preemptions: list[Preemption]
    access_counts: Counter
    assertion_failed: bool = False
    failed_assertion: str | None = None
    failed_thread: int | None = None
    deadlocked: bool = False
    blocked: tuple = ()  # ((tid, blocked-on), ...) at deadlock
    final_memory: dict = field(default_factory=dict)

    @property
    def c_used(self) -> int:
        return len(self.preemptions)

    @property
    def preempted_vars(self) -> frozenset[VarId]:
        return frozenset(p.var for p in self.preemptions if p.var is not None)

    @property
    def v_used(self) -> int:
        return len(self.preempted_vars)

    @property
    def buggy(self) -> bool:
        return self.assertion_failed or self.deadlocked

    @property
    def bug_id(self) -> str | None:
        if self.assertion_failed:
            return f"assert:T{self.failed_thread}:{self.failed_assertion}"
        if self.deadlocked:
            return "deadlock:" + ",".join(f"T{t}@{on}" for t, on in self.blocked)
        return None

    @cached_property
    def hb(self) -> hbgraph.HBGraph:
        return hbgraph.build(self.trace)

    @cached_property
    def t_used(self) -> int:
        return len(self.constrained_threads)

    @cached_property
    def constrained_threads(self) -> frozenset[int]:
        """Threads whose relative order this run pins down.

        For a buggy run: every thread with an action that happens-before the
        failure, plus both sides of every preemption. Otherwise: the threads
        touching any cross-thread happens-before edge, plus preemption sides.
        """
        threads: set[int] = set()
        for p in self.preemptions:
            threads.add(p.thread)
            if p.switched_to is not None:
                threads.add(p.switched_to)
        if self.assertion_failed:
            threads |= hbgraph.ancestor_threads(self.trace, [len(self.trace) - 1])
        elif self.deadlocked:
            stuck = {t for t, _ in self.blocked}
            last = {}
            for e in self.trace:
                if e.thread in stuck:
                    last[e.thread] = e.step
            threads |= hbgraph.ancestor_threads(self.trace, sorted(last.values()))
            threads |= stuck
        else:
            for a, b in self.hb.edges:
                threads.add(a[0])
                threads.add(b[0])
        return frozenset(threads)

    @property
    def signature(self) -> tuple[int, int, int]:
        return (self.c_used, self.v_used, self.t_used)

    def trace_text(self) -> str:
        return "\n".join(e.line() for e in self.trace) + "\n"


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


class Policy:
    """Hooks the executor consults. Subclasses override what they need."""

    def initial_priority(self, tid: int) -> int:
        return -tid

    def choose(self, state: SchedulerState, enabled: list[int]) -> int | None:
        """Force a thread choice; ``None`` means strict priority."""
        return None

    def after_step(self, state: SchedulerState, entry: TraceEntry) -> int | None:
        """New priority for the thread that just ran, or ``None`` to keep it."""
        return None


@dataclass(frozen=True)
class PreemptionPoint:
    step: int
    thread: int
    var: VarId | None
    ordinal: int  # this would be the ordinal-th preemption of the run
    priority: int  # priority the thread would drop to


Preemptor = Callable[[PreemptionPoint, "SchedulerState"], bool]


class TrackedSet:
    """Membership test for tracked variables; ``patterns=None`` tracks everything."""

    def __init__(self, patterns: Sequence[VarPattern] | None, l: int) -> None:
        self.patterns = None if patterns is None else frozenset(patterns)
        self.l = l
        self._cache: dict[VarId, bool] = {}

    def __contains__(self, var: VarId) -> bool:
        hit = self._cache.get(var)
        if hit is None:
            if var.loop_iter > self.l:
                hit = False
            elif self.patterns is None:
                hit = True
            else:
                pats = self.patterns
                hit = (
                    VarPattern(var.site) in pats
                    or VarPattern(var.site, var.alloc_index) in pats
                    or VarPattern(var.site, var.alloc_index, var.element) in pats
                    or VarPattern(var.site, None, var.element) in pats
                )
            self._cache[var] = hit
        return hit


class PriorityPreemptor(Policy):
    """Strict priority scheduling with preemptions at tracked-variable accesses.

    A point is eligible after a thread's fake first access, or after an access
    to a tracked variable, when the thread is still enabled and dropping it to
    the next unused preemption priority would switch to another thread. The
    ``decide`` callback is asked at every eligible point.
    """

    def __init__(
        self,
        order: PriorityOrder,
        decide: Preemptor | None = None,
        tracked: TrackedSet | None = None,
        on_point: Callable[[PreemptionPoint, SchedulerState], None] | None = None,
    ) -> None:
        self.order = order
        self.decide = decide
        self.tracked = tracked if tracked is not None else TrackedSet(None, 1 << 30)
        self.on_point = on_point
        self.used = 0

    def initial_priority(self, tid: int) -> int:
        return self.order.thread_priority(tid)

    def point_at(self, state: SchedulerState, entry: TraceEntry) -> PreemptionPoint | None:
        if self.used >= self.order.c:
            return None
        if entry.kind == "ST":
            var = None
        elif entry.var is None or entry.var not in self.tracked:
            return None
        else:
            var = entry.var
        tid = entry.thread
        if not state.is_enabled(tid):
            return None
        cand = self.order.preemption_priority(self.used + 1)
        if not state.would_switch(tid, cand):
            return None
        return PreemptionPoint(entry.step, tid, var, self.used + 1, cand)

    def after_step(self, state: SchedulerState, entry: TraceEntry) -> int | None:
        point = self.point_at(state, entry)
        if point is None:
            return None
        if self.on_point is not None:
            self.on_point(point, state)
        if self.decide is not None and self.decide(point, state):
            self.used += 1
            return point.priority
        return None


class RoundRobin(Policy):
    """Rotate through enabled threads one step at a time, starting at ``start``."""

    def __init__(self, start: int = 0) -> None:
        self.next = start

    def choose(self, state: SchedulerState, enabled: list[int]) -> int | None:
        n = len(state.threads)
        for k in range(n):
            tid = (self.next + k) % n
            if tid in enabled:
                self.next = tid + 1
                return tid
        return None

    def initial_priority(self, tid: int) -> int:
        return 0


class ReplayPolicy(Policy):
    def __init__(self, sched: Schedule) -> None:
        self.sched = sched

    def initial_priority(self, tid: int) -> int:
        if tid >= len(self.sched.priorities):
            raise ReplayDivergence(f"no recorded priority for thread {tid}")
        return self.sched.priorities[tid]

    def choose(self, state: SchedulerState, enabled: list[int]) -> int | None:
        step = state.steps
        if step >= len(self.sched.decisions):
            raise ReplayDivergence(f"schedule ended at step {step} but the program continues")
        d = self.sched.decisions[step]
        if d.thread not in enabled:
            raise ReplayDivergence(f"step {step}: thread {d.thread} is not enabled")
        return d.thread

    def after_step(self, state: SchedulerState, entry: TraceEntry) -> int | None:
        d = self.sched.decisions[entry.step]
        return d.priority if d.preempt else None


# ---------------------------------------------------------------------------
# Executor state
# ---------------------------------------------------------------------------


class ThreadState:
    __slots__ = (
        "tid", "ctx", "gen", "pending", "priority", "eff_tid", "yields",
        "waiting_cond", "halted", "index",
    )

    def __init__(self, tid: int, gen: Any, ctx: ThreadCtx, priority: int) -> None:
        self.tid = tid
        self.ctx = ctx
        self.gen = gen
        self.pending: Action = START
        self.priority = priority
        self.eff_tid = tid
        self.yields = 0
        self.waiting_cond: VarId | None = None
        self.halted = False
        self.index = 0  # per-thread action count


class SchedulerState:
    """All mutable state of one execution; stepped one action at a time."""

    def __init__(self, prog: ProgramDef, policy: Policy | None = None, track_key: bool = False) -> None:
        self.prog = prog
        self.policy = policy or Policy()
        self.mode = prog.array_mode
        self.memory: dict[tuple[VarId, int | None], Any] = {}
        self.arrays: dict[VarId, int] = {}
        self.owner: dict[VarId, int] = {}
        self.counters = AllocCounters()
        self.threads: list[ThreadState] = []
        self.trace: list[TraceEntry] = []
        self.access_counts: Counter = Counter()
        self.steps = 0
        self.preemptions: list[Preemption] = []
        self.decisions: list[Decision] = []
        self._vars: dict[str, VarId] = {}
        self._cells: dict = {}
        self.track_key = track_key
        self._epoch: dict[Any, int] = {}
        self.key_sum = 0
        self.key_xor = 0
        for name, init in prog.globals.items():
            var = VarId(name)
            self._vars[name] = var
            if isinstance(init, list):
                self.arrays[var] = len(init)
                for i, v in enumerate(init):
                    self.memory[var, i] = v
            else:
                self.memory[var, None] = init
        for body, args in zip(prog.threads, prog.thread_args):
            self._new_thread(body, args)

    # -- threads ------------------------------------------------------------

    def _new_thread(self, body: Callable, args: tuple) -> int:
        tid = len(self.threads)
        if tid >= self.prog.n:
            raise ModelError(f"thread {tid} exceeds max_threads={self.prog.n}")
        ctx = ThreadCtx(tid)
        gen = body(ctx, *args)
        self.threads.append(ThreadState(tid, gen, ctx, self.policy.initial_priority(tid)))
        return tid

    def var(self, ref: Any) -> VarId:
        if isinstance(ref, VarId):
            return ref
        v = self._vars.get(ref)
        if v is None:
            v = self._vars[ref] = VarId(ref)
        return v

    def is_enabled(self, tid: int) -> bool:
        th = self.threads[tid]
        if th.halted or th.waiting_cond is not None:
            return False
        p = th.pending
        t = type(p)
        if t is Lock:
            # a self-held lock stays enabled so that stepping it raises
            return self.owner.get(self.var(p.var), tid) == tid
        if t is _Reacquire:
            return self.owner.get(p.var) is None
        if t is Join:
            return self.threads[p.thread].halted
        return True

    def status(self, tid: int) -> tuple[Status, Any]:
        th = self.threads[tid]
        if th.halted:
            return Status.HALTED, None
        if th.waiting_cond is not None:
            return Status.BLOCKED, th.waiting_cond
        if self.is_enabled(tid):
            return Status.RUNNABLE, None
        p = th.pending
        if type(p) is Join:
            return Status.BLOCKED, f"T{p.thread}"
        return Status.BLOCKED, self.var(p.var)

    def enabled(self) -> list[int]:
        return [t.tid for t in self.threads if self.is_enabled(t.tid)]

    def would_switch(self, tid: int, new_priority: int) -> bool:
        for th in self.threads:
            if th.tid != tid and th.priority > new_priority and self.is_enabled(th.tid):
                return True
        return False

    # -- memory -------------------------------------------------------------

    def _cell(self, ref: Any, index: int | None) -> tuple[tuple[VarId, int | None], VarId]:
        hit = self._cells.get((ref, index))
        if hit is None:
            hit = self._cells[ref, index] = self._resolve_cell(ref, index)
        return hit

    def _resolve_cell(self, ref: Any, index: int | None) -> tuple[tuple[VarId, int | None], VarId]:
        base = self.var(ref)
        if index is None:
            key = (base, None)
            if key not in self.memory:
                raise ModelError(f"access to undeclared variable {base}")
            return key, base
        size = self.arrays.get(base)
        if size is None:
            raise ModelError(f"{base} is not an array")
        return (base, index), resolve_array_var(base, index, self.mode, size)

    # -- stepping -----------------------------------------------------------

    def step(self, tid: int) -> TraceEntry:
        """Execute ``tid``'s pending action; returns its trace entry."""
        th = self.threads[tid]
        action = th.pending
        t = type(action)
        var: VarId | None = None
        value: Any = None
        accesses: tuple = ()
        label = ""
        send: Any = None
        advance = True

        if t is Read:
            cell, var = self._cell(action.var, action.index)
            value = send = self.memory[cell]
            accesses = ((var, False),)
        elif t is Write:
            cell, var = self._cell(action.var, action.index)
            self.memory[cell] = value = action.value
            accesses = ((var, True),)
        elif t is Update:
            cell, var = self._cell(action.var, action.index)
            send = self.memory[cell]
            self.memory[cell] = value = action.fn(send)
            accesses = ((var, True),)
        elif t is _Start:
            pass
        elif t is Lock or t is _Reacquire:
            var = self.var(action.var)
            holder = self.owner.get(var)
            if holder is not None:
                if holder == tid:
                    raise ModelError(f"T{tid} relocks {var}")
                raise ContractViolation(f"T{tid} scheduled while blocked on {var}")
            self.owner[var] = tid
            accesses = ((var, True),)
        elif t is Unlock:
            var = self.var(action.var)
            if self.owner.get(var) != tid:
                raise ModelError(f"T{tid} unlocks {var} without holding it")
            del self.owner[var]
            accesses = ((var, True),)
        elif t is Wait:
            var = self.var(action.cond)
            mutex = self.var(action.mutex)
            wait_s(self, tid, var, mutex)
            accesses = ((var, True), (mutex, True))
            advance = False
        elif t is Notify:
            var = self.var(action.cond)
            value = notify_s(self, tid, var)
            accesses = ((var, True),)
        elif t is Alloc:
            v = alloc_var(action.site, action.callstack_hash, self.counters)
            if action.size is None:
                self.memory[v, None] = action.init
            else:
                self.arrays[v] = action.size
                for i in range(action.size):
                    self.memory[v, i] = action.init
            value = send = v
            accesses = ((("alloc", action.site), True),)
        elif t is Spawn:
            value = send = self._new_thread(action.body, action.args)
            accesses = ((("spawn",), True),)
        elif t is Join:
            if not self.threads[action.thread].halted:
                raise ContractViolation(f"T{tid} joined running T{action.thread}")
            value = action.thread
            accesses = ((("thread", action.thread), False),)
        elif t is Yield:
            pass
        elif t is Assert:
            value = action.ok
            label = action.label
            advance = bool(action.ok)
        elif t is Halt:
            advance = False
            th.halted = True
            accesses = ((("thread", tid), True),)
        else:
            raise ModelError(f"T{tid} yielded a non-action: {action!r}")

        if t is Yield:
            handle_yield(self, tid)
        elif t is not _Start:
            th.yields = 0

        if advance:
            try:
                th.pending = th.gen.send(send) if t is not _Start else next(th.gen)
            except StopIteration:
                th.halted = True
                accesses = accesses + ((("thread", tid), True),)
        elif t is Wait:
            th.pending = _Reacquire(self.var(action.mutex))

        entry = TraceEntry(self.steps, tid, action.kind, var, value, accesses, label)
        if var is not None:
            self.access_counts[var.site] += 1
        if self.track_key:
            self._fold_key(th, entry)
        th.index += 1
        self.steps += 1
        self.trace.append(entry)
        return entry

    def _fold_key(self, th: ThreadState, entry: TraceEntry) -> None:
        # per-node epoch of every accessed key: equal multisets <=> equal HB graphs
        ep = self._epoch
        parts = []
        for key, w in entry.accesses:
            e = ep.get(key, 0)
            if w:
                e += 1
                ep[key] = e
            parts.append((key, e, w))
        h = hash((th.tid, th.index, entry.kind, tuple(parts)))
        self.key_sum = (self.key_sum + h) & 0xFFFFFFFFFFFFFFFF
        self.key_xor ^= (h * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF

    def prefix_key(self) -> tuple[int, int, int]:
        """Digest of the happens-before graph of the trace so far."""
        return (self.steps, self.key_sum, self.key_xor)


# ---------------------------------------------------------------------------
# Scheduler operations
# ---------------------------------------------------------------------------


def highest_priority_enabled(state: SchedulerState) -> int:
    best = None
    for th in state.threads:
        if state.is_enabled(th.tid) and (best is None or th.priority > best.priority):
            best = th
    if best is None:
        if all(th.halted for th in state.threads):
            raise ProgramEnd()
        raise Deadlock()
    return best.tid


def wait_s(state: SchedulerState, tid: int, cond: VarId, mutex: VarId) -> None:
    """Block ``tid`` on ``cond`` and release ``mutex``.

    Threads blocked on the mutex become runnable implicitly: a pending lock is
    enabled as soon as its mutex is free.
    """
    if state.owner.get(mutex) != tid:
        raise ModelError(f"T{tid} waits on {cond} without holding {mutex}")
    del state.owner[mutex]
    state.threads[tid].waiting_cond = cond


def notify_s(state: SchedulerState, tid: int, cond: VarId) -> int:
    """Wake every thread waiting on ``cond``; returns how many were woken."""
    woken = 0
    for th in state.threads:
        if th.waiting_cond == cond:
            th.waiting_cond = None
            woken += 1
    return woken


def handle_yield(state: SchedulerState, tid: int) -> None:
    th = state.threads[tid]
    th.yields += 1
    if th.yields > YIELD_THRESHOLD:
        others = [o.priority for o in state.threads if o.tid != tid and not o.halted]
        if others and th.priority >= min(others):
            th.priority = min(others) - 1


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def execute(
    prog: ProgramDef,
    policy: Policy,
    track_key: bool = False,
    max_steps: int = MAX_STEPS,
    state_hook: Callable[[SchedulerState, TraceEntry], None] | None = None,
) -> ExecutionResult:
    """Run ``prog`` to completion under ``policy``."""
    state = SchedulerState(prog, policy, track_key)
    threads = state.threads
    failed = None
    deadlocked = False
    blocked: tuple = ()
    switch_pending = False
    custom_choice = type(policy).choose is not Policy.choose

    while True:
        enabled = state.enabled()
        if not enabled:
            if not all(th.halted for th in threads):
                deadlocked = True
                blocked = tuple(
                    (th.tid, str(state.status(th.tid)[1])) for th in threads if not th.halted
                )
            break
        tid = policy.choose(state, enabled) if custom_choice else None
        if tid is None:
            tid = enabled[0]
            best = threads[tid].priority
            for other in enabled:
                if threads[other].priority > best:
                    tid, best = other, threads[other].priority
        if switch_pending:
            p = state.preemptions[-1]
            state.preemptions[-1] = Preemption(p.step, p.thread, p.var, p.priority, tid)
            switch_pending = False
        if state.steps >= max_steps:
            raise ModelError(f"{prog.name}: run exceeded {max_steps} steps")
        th = threads[tid]
        entry = state.step(tid)
        if entry.kind == "AS" and not entry.value:
            failed = entry
            state.decisions.append(Decision(entry.step, tid, False, th.priority))
            break
        if state_hook is not None:
            state_hook(state, entry)
        new = policy.after_step(state, entry)
        if new is not None:
            switched = state.is_enabled(tid) and state.would_switch(tid, new)
            th.priority = new
            if switched:
                th.eff_tid += prog.n
                state.preemptions.append(Preemption(entry.step, tid, entry.var, new))
                switch_pending = True
            state.decisions.append(Decision(entry.step, tid, True, new))
        else:
            state.decisions.append(Decision(entry.step, tid, False, th.priority))

    inits = tuple(policy.initial_priority(t) for t in range(prog.n))
    return ExecutionResult(
        program=prog.name,
        trace=state.trace,
        schedule=Schedule(prog.name, inits, state.decisions),
        preemptions=state.preemptions,
        access_counts=state.access_counts,
        assertion_failed=failed is not None,
        failed_assertion=None if failed is None else failed.label,
        failed_thread=None if failed is None else failed.thread,
        deadlocked=deadlocked,
        blocked=blocked,
        final_memory=dict(state.memory),
    )


def run(
    prog: ProgramDef,
    prio: PriorityOrder,
    preemptor: Preemptor | None = None,
    tracked: Sequence[VarPattern] | None = None,
    l: int = 1 << 30,
) -> ExecutionResult:
    """Strict priority run of ``prog`` with preemptions chosen by ``preemptor``.

    ``tracked=None`` makes every variable access eligible.
    """
    if prio.n != prog.n:
        raise ValueError(f"priority order is for {prio.n} threads, program has {prog.n}")
    return execute(prog, PriorityPreemptor(prio, preemptor, TrackedSet(tracked, l)))


def replay(prog: ProgramDef, sched: Schedule) -> ExecutionResult:
    if sched.program != prog.name:
        raise ReplayDivergence(f"schedule was recorded on {sched.program!r}, not {prog.name!r}")
    result = execute(prog, ReplayPolicy(sched))
    if len(result.schedule.decisions) != len(sched.decisions):
        raise ReplayDivergence(
            f"program stopped after {len(result.schedule.decisions)} of "
            f"{len(sched.decisions)} recorded steps"
        )
    return result


def random_preemptor(rng: random.Random, p: float) -> Preemptor:
    """Fire at each eligible point with probability ``p``."""
    return lambda point, state: rng.random() < p


def preempt_at_steps(steps: Sequence[int]) -> Preemptor:
    wanted = set(steps)

    def decide(point: PreemptionPoint, state: SchedulerState) -> bool:
        return point.step in wanted

    return decide


__all__ = [
    "ArrayMode",
    "ContractViolation",
    "Deadlock",
    "Decision",
    "ExecutionResult",
    "Policy",
    "Preemption",
    "PreemptionPoint",
    "PriorityOrder",
    "PriorityPreemptor",
    "ProgramEnd",
    "ReplayDivergence",
    "RoundRobin",
    "Schedule",
    "SchedulerState",
    "Status",
    "TraceEntry",
    "TrackedSet",
    "execute",
    "handle_yield",
    "highest_priority_enabled",
    "notify_s",
    "preempt_at_steps",
    "random_preemptor",
    "replay",
    "run",
    "wait_s",
]
