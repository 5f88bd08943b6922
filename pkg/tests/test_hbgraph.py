from __future__ import annotations

from vtbound import corpus, hbgraph
from vtbound.hbgraph import EMPTY_KEY, HBGraph, build, canonical_key
from vtbound.scheduler import PriorityOrder, TraceEntry, preempt_at_steps, run
from vtbound.testkit import VarId

A = VarId("a")


def _entry(step, thread, key, write):
    return TraceEntry(step, thread, "W" if write else "R", key, None, ((key, write),))


def test_single_thread_has_no_edges():
    trace = [_entry(i, 0, A, True) for i in range(4)]
    assert build(trace).edges == frozenset()


def test_fig1_increment_then_assert_read():
    r = run(corpus.fig1(), PriorityOrder((1, 2), 2))
    g = r.hb
    assert len(g.edges) == 1
    (src, dst), = g.edges
    assert src[0] == 1 and dst[0] == 0


def test_reads_only_have_no_edges():
    trace = [_entry(0, 0, A, False), _entry(1, 1, A, False)]
    assert build(trace).edges == frozenset()


def test_edges_follow_trace_order():
    trace = [_entry(0, 0, A, True), _entry(1, 1, A, False), _entry(2, 0, A, True)]
    g = build(trace)
    assert g.edges == {((0, 0), (1, 0)), ((1, 0), (0, 1))}


def test_equal_graphs_from_different_interleavings():
    # T1's increment before T0's read, with and without T0's start step moved around
    prog = corpus.fig1()
    r1 = run(prog, PriorityOrder((1, 2), 2))
    r2 = run(prog, PriorityOrder((3, 2, 1), 2), preempt_at_steps([0]))
    assert [e.thread for e in r1.trace] != [e.thread for e in r2.trace]
    assert canonical_key(r1.hb) == canonical_key(r2.hb)


def test_opposite_orders_differ():
    prog = corpus.fig1()
    a = run(prog, PriorityOrder((1, 2), 2))
    b = run(prog, PriorityOrder((2, 1), 2))
    assert canonical_key(a.hb) != canonical_key(b.hb)


def test_empty_trace_key():
    assert canonical_key(build([])) == EMPTY_KEY
    assert canonical_key(HBGraph((), frozenset())) == EMPTY_KEY


def test_ancestor_threads_follow_edges():
    b = VarId("b")
    trace = [_entry(0, 2, b, True), _entry(1, 1, A, True), _entry(2, 0, A, False)]
    assert hbgraph.ancestor_threads(trace, [2]) == {0, 1}
