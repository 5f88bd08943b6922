from __future__ import annotations

import itertools
import math

import pytest

from vtbound import corpus
from vtbound.explore import (
    ExplorationConfig,
    NotFound,
    VarInfo,
    all_priority_orders,
    classify_bug,
    discover_variables,
    enumerate_var_sets,
    explore,
    explore_dynamic_vb,
    explore_var_sets,
    gen_priority_orders,
    priority_order_count,
)
from vtbound.permcover import covers
from vtbound.scheduler import PriorityOrder, replay
from vtbound.testkit import VarId, VarPattern

A = [VarPattern("a")]


def test_config_validation():
    with pytest.raises(ValueError):
        ExplorationConfig(t=1)
    with pytest.raises(ValueError):
        ExplorationConfig(epsilon=1.0)
    with pytest.raises(ValueError):
        ExplorationConfig(c_max=-1)


def test_var_sets_v1():
    assert enumerate_var_sets([("a", False), ("b", False)], 1) == [("a",), ("b",)]


def test_var_sets_each_once():
    sets = enumerate_var_sets([("a", False), ("b", False), ("c", False)], 2)
    assert len(sets) == 3 and len({frozenset(s) for s in sets}) == 3


def test_var_sets_shared_first():
    sites = [("a", False), ("b", True), ("c", False)]
    assert enumerate_var_sets(sites, 1, shared_first=True) == [("b",), ("a",), ("c",)]
    assert enumerate_var_sets(sites, 1, shared_first=False) == [("a",), ("b",), ("c",)]


def test_var_sets_too_large():
    with pytest.raises(ValueError):
        enumerate_var_sets([("a", False)], 2)


def test_discover_variables_marks_shared():
    infos = discover_variables(corpus.fig4())
    assert [i.var for i in infos] == [VarId("a"), VarId("b")]
    assert all(isinstance(i, VarInfo) and i.shared for i in infos)


def test_priority_order_count_example():
    assert priority_order_count(5, 0, 3, 0.01) == 176


def test_gen_priority_orders_pairwise_coverage():
    orders = gen_priority_orders(8, 0, 2, 0.01, seed=3)
    assert len(orders) == len({o.perm for o in orders})
    assert covers([[x - 1 for x in o.perm] for o in orders], 8, 2)


def test_gen_priority_orders_all_when_small():
    orders = gen_priority_orders(2, 1, 2, seed=0)
    assert sorted(o.perm for o in orders) == sorted(itertools.permutations((1, 2, 3)))


def test_gen_priority_orders_single_thread():
    assert [o.perm for o in gen_priority_orders(1, 0, 2)] == [(1,)]


def test_gen_priority_orders_seeded():
    a = gen_priority_orders(6, 1, 2, seed=4)
    b = gen_priority_orders(6, 1, 2, seed=4)
    assert [o.perm for o in a] == [o.perm for o in b]


def test_all_priority_orders_identity_first():
    orders = list(all_priority_orders(2, 1))
    assert orders[0] == PriorityOrder.identity(2, 1)
    assert len(orders) == 6


def test_all_priority_orders_seeded_stream_distinct():
    orders = list(itertools.islice(all_priority_orders(7, 2, seed=1), 500))
    assert len({o.perm for o in orders}) == 500


def test_fig1_found_at_c0():
    rep = explore(corpus.fig1(), [], ExplorationConfig(c_max=0, t=2))
    assert rep.bug_ids == {"assert:T0:a==0"}
    assert rep.schedules_executed == 2


def test_fig3_needs_two_preemptions():
    prog = corpus.fig3()
    assert not explore(prog, A, ExplorationConfig(c_max=1, v=1)).bugs
    rep = explore(prog, A, ExplorationConfig(c_max=2, v=1))
    (bug,) = rep.bugs.values()
    assert bug.signature == (2, 1, 2)
    assert replay(prog, bug.schedule).bug_id == bug.bug_id


def test_fig4_single_variable_not_enough():
    rep = explore(corpus.fig4(), A, ExplorationConfig(c_max=2, v=1))
    assert not rep.bugs


def test_bound_order_is_nondecreasing():
    seen = []
    prog = corpus.fig3()
    rep = explore(prog, A, ExplorationConfig(c_max=2))
    assert list(rep.per_bound) == sorted(rep.per_bound)
    for c, (executed, pruned) in rep.per_bound.items():
        seen.append(executed + pruned)
    assert sum(seen) == rep.generated


def test_executed_plus_pruned_is_generated():
    rep = explore_var_sets(corpus.fig9(), ExplorationConfig(c_max=2, v=2, t=3))
    assert rep.schedules_executed + rep.schedules_pruned == rep.generated
    assert rep.schedules_pruned > 0


def test_witness_within_bounds():
    cfg = ExplorationConfig(c_max=2, v=1, t=2)
    rep = explore_var_sets(corpus.fig9(), cfg)
    for bug in rep.bugs.values():
        c, v, _ = bug.signature
        assert c <= cfg.c_max and v <= cfg.v


def test_budget_stops_search():
    rep = explore(corpus.fig9(), None, ExplorationConfig(c_max=2, t=3), budget=10)
    assert rep.budget_exhausted and rep.schedules_executed == 10


def test_stop_at_first():
    rep = explore(corpus.fig3(), A, ExplorationConfig(c_max=2), stop_at_first=True)
    assert rep.first_bug_at == rep.schedules_executed


def test_dynamic_vb_fig4():
    v2 = explore_dynamic_vb(corpus.fig4(), ExplorationConfig(c_max=2, v=2))
    v1 = explore_dynamic_vb(corpus.fig4(), ExplorationConfig(c_max=2, v=1))
    assert v2.bugs and not v1.bugs
    assert v1.schedules_executed < v2.schedules_executed


def test_dynamic_vb_needs_v():
    with pytest.raises(ValueError):
        explore_dynamic_vb(corpus.fig4(), ExplorationConfig(c_max=2, v=0))


@pytest.mark.parametrize(
    "factory, want",
    [(corpus.fig7, (0, 0, 3)), (corpus.fig8, (1, 1, 3)), (corpus.allocation_vector, (2, 1, 2))],
)
def test_classify_examples(factory, want):
    assert classify_bug(factory(), 2, 2, 3) == want


def test_classify_bug_free():
    with pytest.raises(NotFound):
        classify_bug(corpus.locked_increment(), 2, 2, 2)


def test_classify_respects_limits():
    with pytest.raises(NotFound):
        classify_bug(corpus.fig3(), 1, 1, 2)
    with pytest.raises(NotFound):
        classify_bug(corpus.fig7(), 2, 2, 2)


def test_abba_deadlock_signature():
    rep = explore(corpus.abba(), None, ExplorationConfig(c_max=1))
    assert rep.bug_ids == {"deadlock:T0@B,T1@A"}
    assert min(b.signature for b in rep.bugs.values()) == (1, 1, 2)


def test_orders_respect_thread_count():
    # with many threads, pairwise coverage needs far fewer orders than n!
    prog = corpus.make_planted(0, 0, 2, extra_threads=6)
    orders = gen_priority_orders(prog.n, 0, 2)
    assert len(orders) < math.factorial(prog.n)
