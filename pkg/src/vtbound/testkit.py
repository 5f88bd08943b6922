"""Modeled multithreaded programs.

A program is a list of thread bodies. A thread body is a generator function
taking a :class:`ThreadCtx` and yielding :class:`Action` objects; the value of
each action (what a ``Read`` observed, the VarId an ``Alloc`` produced, the id
of a spawned thread) is sent back into the generator. Bodies must be
deterministic functions of what they observe, so a fixed sequence of
scheduling decisions fixes the whole execution.

Example::

    def reader(th):
        t1 = yield Read("a")
        t2 = yield Read("a")
        yield Assert(t1 == t2, "t1==t2")

    def writer(th):
        yield Update("a", lambda x: x + 1)

    prog = ProgramDef("race", [reader, writer], globals={"a": 0})
"""

from __future__ import annotations

import zlib
from collections import defaultdict
from collections.abc import Callable, Generator, Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union


class ModelError(Exception):
    """The modeled program broke a model rule (bad unlock, out-of-bounds index, ...)."""


class ArrayMode(str, Enum):
    PER_ELEMENT = "per-element"
    WHOLE_ARRAY = "whole-array"


@dataclass(frozen=True, order=True)
class VarId:
    """Identity of a tracked variable.

    Globals are ``VarId(name, 0, 0)``. Heap variables are named by their
    allocation site and the ordinal of that site's execution; ``loop_iter``
    counts earlier executions of the site under an identical call stack.
    ``element`` is set only for per-element array variables.
    """

    site: str
    alloc_index: int = 0
    loop_iter: int = 0
    element: int | None = None
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        # VarIds key every memory cell; hashing the fields on each access is hot
        object.__setattr__(
            self, "_hash", hash((self.site, self.alloc_index, self.loop_iter, self.element))
        )

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        s = self.site if (self.alloc_index, self.loop_iter) == (0, 0) else (
            f"{self.site}#{self.alloc_index}.{self.loop_iter}"
        )
        return s if self.element is None else f"{s}[{self.element}]"


VarRef = Union[str, VarId]


def as_var(ref: VarRef) -> VarId:
    return ref if isinstance(ref, VarId) else VarId(ref)


@dataclass(frozen=True)
class VarPattern:
    """Matches variables by site, optionally narrowed to one allocation and element."""

    site: str
    alloc_index: int | None = None
    element: int | None = None

    @classmethod
    def of(cls, var: VarId) -> VarPattern:
        return cls(var.site, var.alloc_index, var.element)

    def matches(self, var: VarId) -> bool:
        if self.site != var.site:
            return False
        if self.alloc_index is not None and self.alloc_index != var.alloc_index:
            return False
        return self.element is None or self.element == var.element

    def __str__(self) -> str:
        s = self.site
        if self.alloc_index is not None:
            s += f"#{self.alloc_index}"
        if self.element is not None:
            s += f"[{self.element}]"
        return s


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------


class Action:
    """One atomic, scheduler-visible step of a thread."""

    __slots__ = ()
    kind = "?"


@dataclass(frozen=True, slots=True)
class Read(Action):
    var: VarRef
    index: int | None = None
    kind = "R"


@dataclass(frozen=True, slots=True)
class Write(Action):
    var: VarRef
    value: Any
    index: int | None = None
    kind = "W"


@dataclass(frozen=True, slots=True)
class Update(Action):
    """Atomic read-modify-write (``a++``); the thread receives the old value."""

    var: VarRef
    fn: Callable[[Any], Any]
    index: int | None = None
    kind = "U"


@dataclass(frozen=True, slots=True)
class Alloc(Action):
    """Heap allocation at a static site; ``size`` makes it an array."""

    site: str
    callstack_hash: int = 0
    init: Any = 0
    size: int | None = None
    kind = "A"


@dataclass(frozen=True, slots=True)
class Lock(Action):
    var: VarRef
    kind = "L"


@dataclass(frozen=True, slots=True)
class Unlock(Action):
    var: VarRef
    kind = "UL"


@dataclass(frozen=True, slots=True)
class Wait(Action):
    cond: VarRef
    mutex: VarRef
    kind = "WT"


@dataclass(frozen=True, slots=True)
class Notify(Action):
    cond: VarRef
    kind = "N"


@dataclass(frozen=True, slots=True)
class Spawn(Action):
    body: Callable[..., Generator]
    args: tuple = ()
    kind = "S"


@dataclass(frozen=True, slots=True)
class Join(Action):
    thread: int
    kind = "J"


@dataclass(frozen=True, slots=True)
class Yield(Action):
    kind = "Y"


@dataclass(frozen=True, slots=True)
class Assert(Action):
    ok: bool
    label: str = "assert"
    kind = "AS"


@dataclass(frozen=True, slots=True)
class Halt(Action):
    kind = "H"


ThreadBody = Callable[..., Generator[Action, Any, None]]


class ThreadCtx:
    """Per-thread handle passed to a body: its id and a model call stack."""

    __slots__ = ("tid", "stack")

    def __init__(self, tid: int) -> None:
        self.tid = tid
        self.stack: list[str] = []

    def callstack_hash(self) -> int:
        return callstack_hash(self.stack)

    def alloc(self, site: str, init: Any = 0, size: int | None = None) -> Alloc:
        return Alloc(site, self.callstack_hash(), init, size)

    def call(self, label: str, gen: Generator) -> Generator:
        """``result = yield from th.call("f", f(th))`` runs ``f`` under a stack frame."""
        self.stack.append(label)
        try:
            return (yield from gen)
        finally:
            self.stack.pop()


def callstack_hash(labels: Iterable[str]) -> int:
    # crc32 rather than hash(): must be stable across processes for replay
    h = 0
    for label in labels:
        h = zlib.crc32(label.encode(), h) ^ 0x5BD1E995
    return h & 0xFFFFFFFF


@dataclass
class ProgramDef:
    """A deterministic, terminating modeled program.

    ``globals`` maps names to initial values; a list value declares a global
    array. Names of mutexes and condition variables are declared here too
    (any initial value) so they can be tracked like other variables.
    """

    name: str
    threads: list[ThreadBody]
    globals: Mapping[str, Any] = field(default_factory=dict)
    array_mode: ArrayMode = ArrayMode.PER_ELEMENT
    max_threads: int | None = None
    thread_args: list[tuple] | None = None

    def __post_init__(self) -> None:
        self.array_mode = ArrayMode(self.array_mode)
        if self.max_threads is None:
            self.max_threads = len(self.threads)
        if self.max_threads < len(self.threads):
            raise ModelError("max_threads is smaller than the initial thread count")
        if self.thread_args is None:
            self.thread_args = [() for _ in self.threads]

    @property
    def n(self) -> int:
        return self.max_threads  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Variable naming
# ---------------------------------------------------------------------------


@dataclass
class AllocCounters:
    """Per-site and per-(site, call stack) allocation counts for one execution."""

    per_site: dict[str, int] = field(default_factory=lambda: defaultdict(int))
    per_stack: dict[tuple[str, int], int] = field(default_factory=lambda: defaultdict(int))


def alloc_var(site: str, callstack_hash: int, counters: AllocCounters) -> VarId:
    alloc_index = counters.per_site[site]
    loop_iter = counters.per_stack[site, callstack_hash]
    counters.per_site[site] = alloc_index + 1
    counters.per_stack[site, callstack_hash] = loop_iter + 1
    return VarId(site, alloc_index, loop_iter)


def is_tracked(var: VarId, tracked: Iterable[VarPattern], l: int) -> bool:
    if var.loop_iter > l:
        return False
    return any(p.matches(var) for p in tracked)


def resolve_array_var(
    base: VarId, index: int, mode: ArrayMode | str, size: int | None = None
) -> VarId:
    if size is not None and not 0 <= index < size:
        raise ModelError(f"index {index} out of bounds for {base} (size {size})")
    if ArrayMode(mode) is ArrayMode.WHOLE_ARRAY:
        return base
    return VarId(base.site, base.alloc_index, base.loop_iter, index)
