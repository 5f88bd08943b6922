"""Happens-before graphs over execution traces.

Nodes are executed actions labeled ``(thread, per-thread index)``. An edge
joins two actions of different threads that touch the same variable, in trace
order, when at least one of them writes it. Lock, unlock, wait and notify
count as writes of their mutex or condition variable, so synchronization on
the same object is always ordered.
"""

from __future__ import annotations

import hashlib
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

Node = tuple[int, int]

EMPTY_KEY = "hb:empty"


@dataclass(frozen=True)
class HBGraph:
    nodes: tuple[Node, ...]
    edges: frozenset[tuple[Node, Node]]

    def __len__(self) -> int:
        return len(self.nodes)


def _labels(trace: Sequence) -> list[Node]:
    seen: dict[int, int] = defaultdict(int)
    labels = []
    for e in trace:
        labels.append((e.thread, seen[e.thread]))
        seen[e.thread] += 1
    return labels


def build(trace: Sequence) -> HBGraph:
    labels = _labels(trace)
    by_key: dict = defaultdict(list)  # key -> [(position, thread, is_write)]
    edges = set()
    for pos, e in enumerate(trace):
        for key, w in e.accesses:
            for prev_pos, prev_thread, prev_w in by_key[key]:
                if prev_thread != e.thread and (w or prev_w):
                    edges.add((labels[prev_pos], labels[pos]))
            by_key[key].append((pos, e.thread, w))
    return HBGraph(tuple(labels), frozenset(edges))


def canonical_key(g: HBGraph) -> str:
    if not g.nodes:
        return EMPTY_KEY
    h = hashlib.sha256()
    for t, i in sorted(g.nodes):
        h.update(f"n{t},{i};".encode())
    for (a, b), (c, d) in sorted(g.edges):
        h.update(f"e{a},{b}>{c},{d};".encode())
    return h.hexdigest()


def ancestor_threads(trace: Sequence, sinks: Iterable[int]) -> set[int]:
    """Threads owning any action that happens-before (or is) one of ``sinks``.

    ``sinks`` are trace positions; program order and conflict edges both count.
    """
    sinks = list(sinks)
    if not sinks:
        return set()
    limit = max(sinks)
    by_key: dict = defaultdict(list)
    preds: list[list[int]] = []
    last_of_thread: dict[int, int] = {}
    for pos, e in enumerate(trace[: limit + 1]):
        p = []
        if e.thread in last_of_thread:
            p.append(last_of_thread[e.thread])
        for key, w in e.accesses:
            for prev_pos, prev_thread, prev_w in by_key[key]:
                if prev_thread != e.thread and (w or prev_w):
                    p.append(prev_pos)
            by_key[key].append((pos, e.thread, w))
        last_of_thread[e.thread] = pos
        preds.append(p)
    seen = set(sinks)
    stack = list(sinks)
    while stack:
        for q in preds[stack.pop()]:
            if q not in seen:
                seen.add(q)
                stack.append(q)
    return {trace[pos].thread for pos in seen}
