"""Randomized priority schedulers with probabilistic guarantees.

PCT gives threads random distinct priorities and, at d - 1 randomly chosen
variable accesses, drops the running thread's priority below every initial
one. PCTVB first picks v variables and places the change points only on
accesses to those variables, so the denominator is the access count of the
chosen variables rather than of the whole program.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from vtbound.explore import (
    ExplorationConfig,
    all_priority_orders,
    explore,
    explore_var_sets,
)
from vtbound.scheduler import ExecutionResult, Policy, RoundRobin, execute
from vtbound.testkit import ProgramDef


# ---------------------------------------------------------------------------
# Access profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AccessProfile:
    k: dict[str, int]  # site -> upper bound on accesses per run

    def __post_init__(self) -> None:
        if any(x < 0 for x in self.k.values()):
            raise ValueError("access counts must be >= 0")

    @property
    def total(self) -> int:
        return sum(self.k.values())

    @property
    def Q(self) -> int:
        return len(self.k)

    @property
    def sites(self) -> list[str]:
        return list(self.k)


def estimate_access_profile(prog: ProgramDef, runs: int = 10, seed: int = 0) -> AccessProfile:
    """Per-site maximum access count over round-robin runs with rotated start threads."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    offset = int(np.random.default_rng(seed).integers(prog.n))
    k: dict[str, int] = {}
    for i in range(runs):
        r = execute(prog, RoundRobin((offset + i) % prog.n))
        for site, count in r.access_counts.items():
            k[site] = max(k.get(site, 0), count)
    for name in prog.globals:
        k.setdefault(name, 0)
    return AccessProfile(dict(sorted(k.items())))


# ---------------------------------------------------------------------------
# Change-point plans and policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChangePointPlan:
    priorities: tuple[int, ...]  # initial priority of each thread slot
    points: tuple  # PCT: access indices; PCTVB: (site, j) pairs; i-th gets priority i + 1
    var_set: tuple[str, ...] | None = None


class _ChangePointPolicy(Policy):
    def __init__(self, plan: ChangePointPlan) -> None:
        self.plan = plan
        self.by_access: dict = {p: i + 1 for i, p in enumerate(plan.points)}
        self.per_site = plan.var_set is not None
        self.count = 0
        self.site_counts: dict[str, int] = {}

    def initial_priority(self, tid: int) -> int:
        return self.plan.priorities[tid]

    def after_step(self, state, entry) -> int | None:
        if entry.var is None:
            return None
        if self.per_site:
            site = entry.var.site
            j = self.site_counts.get(site, 0) + 1
            self.site_counts[site] = j
            return self.by_access.get((site, j))
        self.count += 1
        return self.by_access.get(self.count)


def _rng(seed: int | np.random.Generator) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _initial_priorities(n: int, d: int, rng: np.random.Generator) -> tuple[int, ...]:
    # d..d+n-1, so every change-point priority 1..d-1 is below all of them
    return tuple(int(x) + d for x in rng.permutation(n))


def plan_pct(n: int, k: int, d: int, seed: int | np.random.Generator) -> ChangePointPlan:
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = _rng(seed)
    prio = _initial_priorities(n, d, rng)
    m = min(d - 1, k)
    points = tuple(int(x) + 1 for x in rng.choice(k, size=m, replace=False)) if m else ()
    return ChangePointPlan(prio, points)


def plan_pctvb(
    n: int,
    d: int,
    v: int,
    profile: AccessProfile,
    seed: int | np.random.Generator,
    var_set: Sequence[str] | None = None,
) -> ChangePointPlan:
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = _rng(seed)
    if var_set is None:
        if not v < d:
            raise ValueError("PCTVB needs v < d unless the variable set is given")
        sites = profile.sites
        if v > len(sites):
            raise ValueError(f"v={v} exceeds the {len(sites)} profiled sites")
        chosen = tuple(sites[i] for i in sorted(rng.choice(len(sites), size=v, replace=False)))
    else:
        chosen = tuple(var_set)
    prio = _initial_priorities(n, d, rng)
    S = [(q, j) for q in chosen for j in range(1, profile.k.get(q, 0) + 1)]
    m = min(d - 1, len(S))
    points = tuple(S[i] for i in rng.choice(len(S), size=m, replace=False)) if m else ()
    return ChangePointPlan(prio, points, chosen)


def run_plan(prog: ProgramDef, plan: ChangePointPlan) -> ExecutionResult:
    return execute(prog, _ChangePointPolicy(plan))


def pct_run(
    prog: ProgramDef, n: int, k: int, d: int, seed: int | np.random.Generator
) -> ExecutionResult:
    return run_plan(prog, plan_pct(n, k, d, seed))


def pctvb_run(
    prog: ProgramDef,
    n: int,
    d: int,
    v: int,
    profile: AccessProfile,
    seed: int | np.random.Generator,
    var_set: Sequence[str] | None = None,
) -> ExecutionResult:
    """A change point (q, j) fires at the j-th access of site q; unreached ones never fire."""
    return run_plan(prog, plan_pctvb(n, d, v, profile, seed, var_set))


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


def pct_bound(n: int, k: int, d: int) -> float:
    if n < 1 or k < 1 or d < 1:
        raise ValueError("need n, k, d >= 1")
    return 1.0 / (n * k ** (d - 1))


def pctvb_bound(n: int, k_list: Sequence[int], d: int) -> float:
    return pct_bound(n, sum(k_list), d)


def full_bound(n: int, Q: int, v: int, k_list: Sequence[int], d: int) -> float:
    return pctvb_bound(n, k_list, d) / math.comb(Q, v)


def jensen_compare(profile: AccessProfile | Sequence[int]) -> tuple[float, float]:
    """(E1, E2): bug-hit probability without and with 1-variable bounding.

    Sites with zero accesses are left out of both.
    """
    ks = list(profile.k.values()) if isinstance(profile, AccessProfile) else list(profile)
    ks = [x for x in ks if x > 0]
    if not ks:
        raise ValueError("profile has no accessed sites")
    Q = len(ks)
    e1 = 1.0 / sum(ks)
    e2 = sum(1.0 / (Q * x) for x in ks) / Q
    return e1, e2


def vb_helps(Q: int, v: int, d: int, f: float) -> bool:
    if Q < 1 or v < 1 or d < 1 or f <= 0:
        raise ValueError("need Q, v, d >= 1 and f > 0")
    return Q ** (d - v - 1) >= (v * f) ** (d - 1)


# ---------------------------------------------------------------------------
# Executions until the first bug
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PCT:
    d: int
    k: int | None = None  # None: profile the program
    profile_runs: int = 10

    label = "pct"


@dataclass(frozen=True)
class PCTVB:
    d: int
    v: int = 1
    var_set: tuple[str, ...] | None = None
    profile_runs: int = 10

    label = "pctvb"


@dataclass(frozen=True)
class Exhaustive:
    """Iterative context bounding; ``bounded=False`` tracks all variables and all orders."""

    c: int
    v: int = 1
    t: int = 2
    bounded: bool = True

    @property
    def label(self) -> str:
        return f"exhaustive-{self.c},{self.v},{self.t}" if self.bounded else f"unbounded-c{self.c}"


Strategy = PCT | PCTVB | Exhaustive


@dataclass
class TrialStats:
    strategy: str
    max_runs: int
    counts: list[int | None] = field(default_factory=list)  # None: timed out

    @property
    def found(self) -> list[int]:
        return [c for c in self.counts if c is not None]

    @property
    def timed_out(self) -> int:
        return sum(c is None for c in self.counts)

    @property
    def mean(self) -> float | None:
        """Mean over trials that found the bug; None when every trial timed out."""
        f = self.found
        return sum(f) / len(f) if f else None

    def rows(self) -> list[str]:
        out = ["trial,executions,found"]
        for i, c in enumerate(self.counts):
            out.append(f"{i},{self.max_runs if c is None else c},{int(c is not None)}")
        return out


def _one_trial(prog: ProgramDef, strategy: Strategy, max_runs: int, seed: int) -> int | None:
    rng = np.random.default_rng(seed)
    if isinstance(strategy, Exhaustive):
        cfg = ExplorationConfig(
            c_max=strategy.c, v=strategy.v, t=max(2, strategy.t), seed=seed % (2**32)
        )
        if strategy.bounded:
            rep = explore_var_sets(prog, cfg, budget=max_runs, stop_at_first=True)
        else:
            orders = all_priority_orders(prog.n, strategy.c, seed=seed)
            rep = explore(prog, None, cfg, orders=orders, budget=max_runs, stop_at_first=True)
        return rep.first_bug_at
    if isinstance(strategy, PCT):
        k = strategy.k or max(1, estimate_access_profile(prog, strategy.profile_runs, seed).total)
        for i in range(1, max_runs + 1):
            if pct_run(prog, prog.n, k, strategy.d, rng).buggy:
                return i
        return None
    profile = estimate_access_profile(prog, strategy.profile_runs, seed)
    for i in range(1, max_runs + 1):
        r = pctvb_run(prog, prog.n, strategy.d, strategy.v, profile, rng, strategy.var_set)
        if r.buggy:
            return i
    return None


def trial_seeds(seed: int, trials: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]


def executions_to_bug(
    prog: ProgramDef,
    strategy: Strategy,
    max_runs: int = 10_000,
    trials: int = 10,
    seed: int = 0,
    workers: int = 1,
) -> TrialStats:
    """Per trial, how many executions ran until the first buggy one."""
    seeds = trial_seeds(seed, trials)
    args = [(prog, strategy, max_runs, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            counts = list(pool.map(_one_trial, *zip(*args)))
    else:
        counts = [_one_trial(*a) for a in args]
    return TrialStats(strategy.label, max_runs, counts)


def hit_rate(prog: ProgramDef, strategy: PCT | PCTVB, trials: int, seed: int = 0) -> float:
    """Fraction of single runs that hit a bug."""
    if isinstance(strategy, PCT):
        k = strategy.k or max(1, estimate_access_profile(prog, strategy.profile_runs, seed).total)
        rng = np.random.default_rng(seed)
        hits = sum(pct_run(prog, prog.n, k, strategy.d, rng).buggy for _ in range(trials))
    else:
        profile = estimate_access_profile(prog, strategy.profile_runs, seed)
        rng = np.random.default_rng(seed)
        hits = sum(
            pctvb_run(prog, prog.n, strategy.d, strategy.v, profile, rng, strategy.var_set).buggy
            for _ in range(trials)
        )
    return hits / trials


__all__ = [
    "PCT",
    "PCTVB",
    "AccessProfile",
    "ChangePointPlan",
    "Exhaustive",
    "TrialStats",
    "estimate_access_profile",
    "executions_to_bug",
    "full_bound",
    "hit_rate",
    "jensen_compare",
    "pct_bound",
    "pct_run",
    "pctvb_bound",
    "pctvb_run",
    "plan_pct",
    "plan_pctvb",
    "vb_helps",
]
