"""Example programs with known (c, v, t) signatures, plus planted-bug generators.

Thread 0 is always the checking thread. ``a++`` is a single atomic
``Update``, so each program's accesses match the source line by line.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from vtbound.scheduler import RoundRobin, execute
from vtbound.testkit import (
    Assert,
    Lock,
    Notify,
    ProgramDef,
    Read,
    Unlock,
    Update,
    Wait,
    Write,
)


class Unsupported(ValueError):
    """No generator template for the requested (c, v, t)."""


def _inc(x: int) -> int:
    return x + 1


# ---------------------------------------------------------------------------
# Two-thread programs
# ---------------------------------------------------------------------------


def _fig1_check(th):
    a = yield Read("a")
    yield Assert(a == 0, "a==0")


def _incr(th, var="a"):
    yield Update(var, _inc)


def fig1() -> ProgramDef:
    return ProgramDef("fig1", [_fig1_check, _incr], {"a": 0})


def _read_twice(th):
    t1 = yield Read("a")
    t2 = yield Read("a")
    yield Assert(t1 == t2, "t1==t2")


def fig2() -> ProgramDef:
    return ProgramDef("fig2", [_read_twice, _incr], {"a": 0})


def _flip(th):
    yield Write("a", 1)
    yield Write("a", 0)


def fig3() -> ProgramDef:
    return ProgramDef("fig3", [_read_twice, _flip], {"a": 0})


def _fig4_check(th):
    t1 = yield Read("a")
    t2 = yield Read("a")
    t3 = yield Read("b")
    yield Assert(t1 == t2 or t3 != 1, "t1==t2 or t3!=1")


def _fig4_writer(th):
    yield Write("a", 1)
    yield Write("b", 1)
    yield Write("b", 0)


def fig4() -> ProgramDef:
    return ProgramDef("fig4", [_fig4_check, _fig4_writer], {"a": 0, "b": 0})


# ---------------------------------------------------------------------------
# Three-thread programs
# ---------------------------------------------------------------------------


def _fig7_check(th):
    a = yield Read("a")
    yield Assert(a != 2, "a!=2")


def fig7() -> ProgramDef:
    return ProgramDef("fig7", [_fig7_check, _incr, _incr], {"a": 0})


def _fig8_check(th):
    t1 = yield Read("a")
    t2 = yield Read("a")
    yield Assert(t2 <= t1 + 1, "t2<=t1+1")


def fig8() -> ProgramDef:
    return ProgramDef("fig8", [_fig8_check, _incr, _incr], {"a": 0})


def _fig9_check(th):
    t1 = yield Read("a")
    t2 = yield Read("a")
    t3 = yield Read("b")
    t4 = yield Read("b")
    yield Assert(t1 == t2 or t3 == t4, "t1==t2 or t3==t4")


def fig9() -> ProgramDef:
    return ProgramDef(
        "fig9", [_fig9_check, _incr, _incr], {"a": 0, "b": 0}, thread_args=[(), ("a",), ("b",)]
    )


# ---------------------------------------------------------------------------
# Block allocator
# ---------------------------------------------------------------------------

BLOCKS = 6


def _find_free_block(th):
    yield Lock("m")
    found = -1
    for i in range(BLOCKS):
        flag = yield Read("blocks", i)
        if flag == 0:
            found = i
            break
    yield Unlock("m")
    return found


def _is_block_free(th, b):
    yield Lock("m")
    flag = yield Read("blocks", b)
    yield Unlock("m")
    return flag == 0


def _mark_block_allocated(th, b):
    yield Lock("m")
    yield Write("blocks", 1, b)
    yield Unlock("m")


def _free_all_blocks(th):
    yield Lock("m")
    for i in range(BLOCKS):
        yield Write("blocks", 0, i)
    yield Unlock("m")


def _allocator(th):
    b = yield from th.call("FindFreeBlock", _find_free_block(th))
    if b < 0:
        return
    free = yield from th.call("IsBlockFree", _is_block_free(th, b))
    yield Assert(free, "IsBlockFree(b)")
    yield from th.call("MarkBlockAllocated", _mark_block_allocated(th, b))
    yield from th.call("FreeAllBlocks", _free_all_blocks(th))


def allocation_vector() -> ProgramDef:
    return ProgramDef(
        "allocation-vector", [_allocator, _allocator], {"blocks": [0] * BLOCKS, "m": None}
    )


# ---------------------------------------------------------------------------
# Two variables with different access frequencies
# ---------------------------------------------------------------------------

PCTF_OTHER_ACCESSES = 60


def _pctf_reader(th, kx, ky):
    t1 = yield Read("x")
    t2 = yield Read("x")
    yield Assert(t1 == t2, "t1==t2")
    for _ in range(ky // 2):
        yield Read("y")


def _pctf_writer(th, kx, ky):
    yield Write("x", 1)
    for _ in range(kx - 3):
        yield Read("x")
    for _ in range(ky - ky // 2):
        yield Write("y", 1)


def pctf_pair(ratio: float = 0.1) -> ProgramDef:
    """Planted (1,1,2) bug on ``x``; ``x`` is accessed ``ratio`` times as often as ``y``."""
    if not 0 < ratio <= 1:
        raise ValueError("ratio must be in (0, 1]")
    ky = PCTF_OTHER_ACCESSES
    kx = max(3, round(ky * ratio))
    return ProgramDef(
        f"pctf:{ratio:g}",
        [_pctf_reader, _pctf_writer],
        {"x": 0, "y": 0},
        thread_args=[(kx, ky), (kx, ky)],
    )


# ---------------------------------------------------------------------------
# Controls
# ---------------------------------------------------------------------------


def _locked_incr(th):
    yield Lock("m")
    c = yield Read("count")
    yield Write("count", c + 1)
    again = yield Read("count")
    yield Assert(again == c + 1, "count stable under lock")
    yield Unlock("m")


def locked_increment() -> ProgramDef:
    return ProgramDef("locked-increment", [_locked_incr, _locked_incr], {"count": 0, "m": None})


def _consumer(th):
    yield Lock("m")
    ready = yield Read("ready")
    while not ready:
        yield Wait("cv", "m")
        ready = yield Read("ready")
    item = yield Read("item")
    yield Assert(item == 42, "item==42")
    yield Unlock("m")


def _producer(th):
    yield Lock("m")
    yield Write("item", 42)
    yield Write("ready", 1)
    yield Notify("cv")
    yield Unlock("m")


def producer_consumer() -> ProgramDef:
    return ProgramDef(
        "producer-consumer",
        [_consumer, _producer],
        {"item": 0, "ready": 0, "m": None, "cv": None},
    )


def _lock_pair(th, first, second):
    yield Lock(first)
    yield Lock(second)
    yield Unlock(second)
    yield Unlock(first)


def abba() -> ProgramDef:
    return ProgramDef(
        "abba",
        [_lock_pair, _lock_pair],
        {"A": None, "B": None},
        thread_args=[("A", "B"), ("B", "A")],
    )


# ---------------------------------------------------------------------------
# Planted bugs
# ---------------------------------------------------------------------------


def _planted_c0(th, incrementers):
    a = yield Read("a")
    yield Assert(a != incrementers, f"a!={incrementers}")


def _planted_c1(th, incrementers):
    t1 = yield Read("a")
    t2 = yield Read("a")
    yield Assert(t2 < t1 + incrementers, f"t2<t1+{incrementers}")


def _bump_decoys(th, decoys):
    # non-atomic d++ on every decoy: two accesses per variable per thread
    for i in range(decoys):
        x = yield Read(f"d{i}")
        yield Write(f"d{i}", x + 1)


def _planted_c2_check(th, decoys):
    yield from _bump_decoys(th, decoys)
    t1 = yield Read("a")
    t2 = yield Read("a")
    yield Assert(t1 == t2, "t1==t2")


def _planted_c2_flip(th, decoys):
    yield from _bump_decoys(th, decoys)
    yield Write("a", 1)
    yield Write("a", 0)


def _bystander(th, k, accesses=2):
    for j in range(accesses):
        yield Write(f"p{k}", j)


PLANTED = {(0, 0, t) for t in range(2, 6)} | {(1, 1, t) for t in range(2, 6)} | {
    (2, 1, 2),
    (2, 2, 2),
    (2, 2, 3),
}


def make_planted(
    c: int,
    v: int,
    t: int,
    *,
    decoys: int = 0,
    extra_threads: int = 0,
    verify: bool = True,
) -> ProgramDef:
    """Program whose minimal bug signature is exactly (c, v, t).

    ``decoys`` adds that many variables accessed by both threads of the
    (2,1,2) template (so Q = decoys + 1). ``extra_threads`` adds threads that
    only touch private variables. With ``verify`` the signature is checked
    by exhaustive classification (cached per argument tuple).
    """
    if (c, v, t) not in PLANTED:
        raise Unsupported(f"no planted-bug template for (c,v,t)=({c},{v},{t})")
    if decoys and (c, v, t) != (2, 1, 2):
        raise Unsupported("decoy variables are only supported for (2,1,2)")
    if verify:
        _verified(c, v, t, decoys, extra_threads)
    return _build_planted(c, v, t, decoys, extra_threads)


def _build_planted(c: int, v: int, t: int, decoys: int, extra: int) -> ProgramDef:
    name = f"planted:{c},{v},{t}"
    if decoys:
        name += f":{decoys + 1}"
    if extra:
        name += f"+{extra}"
    globals_: dict = {"a": 0, "b": 0}
    if (c, v) == (0, 0):
        threads = [_planted_c0] + [_incr] * (t - 1)
        args = [(t - 1,)] + [()] * (t - 1)
    elif (c, v) == (1, 1):
        threads = [_planted_c1] + [_incr] * (t - 1)
        args = [(t - 1,)] + [()] * (t - 1)
    elif (c, v, t) == (2, 1, 2):
        threads = [_planted_c2_check, _planted_c2_flip]
        args = [(decoys,), (decoys,)]
        globals_.update({f"d{i}": 0 for i in range(decoys)})
    elif (c, v, t) == (2, 2, 2):
        threads = [_fig4_check, _fig4_writer]
        args = [(), ()]
    else:
        threads = [_fig9_check, _incr, _incr]
        args = [(), ("a",), ("b",)]
    for k in range(extra):
        threads.append(_bystander)
        args.append((k,))
        globals_[f"p{k}"] = 0
    return ProgramDef(name, threads, globals_, thread_args=args)


@lru_cache(maxsize=None)
def _verified(c: int, v: int, t: int, decoys: int, extra: int) -> None:
    from vtbound.explore import classify_bug

    prog = _build_planted(c, v, t, decoys, extra)
    got = classify_bug(prog, c_limit=c, v_limit=v, t_limit=max(t, 2))
    if got != (c, v, t):
        raise AssertionError(f"{prog.name}: generator produced signature {got}")


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    factory: Callable[[], ProgramDef]
    expected: tuple[int, int, int] | None  # None = bug-free
    note: str = ""

    def program(self) -> ProgramDef:
        return self.factory()


def corpus_catalog() -> list[CorpusEntry]:
    return [
        CorpusEntry("fig1", fig1, (0, 0, 2), "assert runs after the increment"),
        CorpusEntry("fig2", fig2, (1, 1, 2), "increment between two reads"),
        CorpusEntry("fig3", fig3, (2, 1, 2), "reads straddle a write of 1 and a write of 0"),
        CorpusEntry("fig4", fig4, (2, 2, 2), "needs preemptions on both a and b"),
        CorpusEntry("fig7", fig7, (0, 0, 3), "both increments before the assert"),
        CorpusEntry("fig8", fig8, (1, 1, 3), "both increments between two reads"),
        CorpusEntry("fig9", fig9, (2, 2, 3), "a++ between the a reads, b++ between the b reads"),
        CorpusEntry(
            "allocation-vector", allocation_vector, (2, 1, 2),
            "both threads find the same free block",
        ),
        CorpusEntry("pctf-pair", pctf_pair, (1, 1, 2), "x read twice around a write"),
        CorpusEntry("abba", abba, (1, 1, 2), "lock-order deadlock"),
        CorpusEntry("locked-increment", locked_increment, None, "all accesses under one mutex"),
        CorpusEntry("producer-consumer", producer_consumer, None, "wait/notify handoff"),
    ]


def get_entry(name: str) -> CorpusEntry:
    for e in corpus_catalog():
        if e.name == name:
            return e
    raise KeyError(name)


def program_by_name(name: str) -> ProgramDef:
    """Catalog names, ``planted:c,v,t[:Q][+extra]`` and ``pctf:<ratio>``."""
    if name.startswith("planted:"):
        body, _, extra = name.partition("+")
        parts = body.split(":")
        try:
            c, v, t = (int(x) for x in parts[1].split(","))
            q = int(parts[2]) if len(parts) > 2 else 1
            extra_threads = int(extra) if extra else 0
        except (ValueError, IndexError):
            raise KeyError(name) from None
        return make_planted(c, v, t, decoys=q - 1, extra_threads=extra_threads)
    if name.startswith("pctf:"):
        try:
            ratio = float(name.split(":", 1)[1])
        except ValueError:
            raise KeyError(name) from None
        return pctf_pair(ratio)
    return get_entry(name).program()


# ---------------------------------------------------------------------------
# Access profiling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AccessHistogram:
    means: dict[str, float]  # site -> mean accesses per run
    buckets: dict[int, int]  # rounded mean -> number of sites


def profile_access_frequencies(prog: ProgramDef, runs: int = 10, seed: int = 0) -> AccessHistogram:
    if runs < 1:
        raise ValueError("runs must be >= 1")
    rng = np.random.default_rng(seed)
    total: Counter = Counter()
    for _ in range(runs):
        r = execute(prog, RoundRobin(int(rng.integers(prog.n))))
        total.update(r.access_counts)
    means = {site: total[site] / runs for site in sorted(total)}
    buckets = Counter(round(m) for m in means.values())
    return AccessHistogram(means, dict(sorted(buckets.items())))
