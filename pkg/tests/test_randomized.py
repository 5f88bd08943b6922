from __future__ import annotations

import math

import numpy as np
import pytest

from vtbound import corpus
from vtbound.randomized import (
    PCT,
    PCTVB,
    AccessProfile,
    ChangePointPlan,
    Exhaustive,
    TrialStats,
    estimate_access_profile,
    executions_to_bug,
    full_bound,
    hit_rate,
    jensen_compare,
    pct_bound,
    pctvb_bound,
    plan_pct,
    plan_pctvb,
    run_plan,
    trial_seeds,
    vb_helps,
)
from vtbound.scheduler import RoundRobin, execute
from vtbound.testkit import ProgramDef, Read, Write


def test_pct_bound_example():
    assert pct_bound(2, 4, 2) == pytest.approx(1 / 8)


def test_pctvb_bound_example():
    assert pctvb_bound(2, [2], 2) == pytest.approx(1 / 4)


def test_full_bound_divides_by_choices():
    assert full_bound(2, 4, 1, [2], 2) == pytest.approx(1 / 16)
    assert full_bound(3, 5, 2, [1, 2], 3) == pytest.approx(pctvb_bound(3, [1, 2], 3) / 10)


def test_bounds_reject_bad_input():
    with pytest.raises(ValueError):
        pct_bound(0, 1, 1)
    with pytest.raises(ValueError):
        vb_helps(1, 0, 2, 1.0)


def test_jensen_example():
    e1, e2 = jensen_compare([1, 3])
    assert (e1, e2) == (pytest.approx(1 / 4), pytest.approx(1 / 3))


def test_jensen_skips_zero_sites():
    assert jensen_compare([0, 1, 3]) == jensen_compare([1, 3])
    with pytest.raises(ValueError):
        jensen_compare([0, 0])


def test_jensen_equal_counts_tie():
    e1, e2 = jensen_compare([5, 5, 5])
    assert e1 == pytest.approx(e2)


def test_vb_helps_examples():
    assert vb_helps(10, 1, 3, 1.0)
    assert not vb_helps(2, 1, 3, 5.0)
    # at v = d - 1 the left side is 1
    assert vb_helps(4, 2, 3, 0.5) and not vb_helps(4, 2, 3, 0.6)


def test_profile_fig2():
    p = estimate_access_profile(corpus.fig2())
    assert p.k == {"a": 3}
    assert p.Q == 1 and p.total == 3


def test_profile_keeps_untouched_globals():
    def body(th):
        yield Read("x")

    p = estimate_access_profile(ProgramDef("u", [body], {"x": 0, "unused": 0}))
    assert p.k == {"unused": 0, "x": 1}


def _maybe_more(th):
    f = yield Read("flag")
    if f:
        yield Read("x")
        yield Read("x")
    yield Read("x")


def _raise_flag(th):
    yield Write("flag", 1)


def test_profile_takes_maximum_over_rotations():
    prog = ProgramDef("dep", [_maybe_more, _raise_flag], {"flag": 0, "x": 0})
    per_run = [execute(prog, RoundRobin(s)).access_counts.get("x", 0) for s in range(2)]
    assert estimate_access_profile(prog, runs=2).k["x"] == max(per_run)


def test_profile_rejects_zero_runs():
    with pytest.raises(ValueError):
        estimate_access_profile(corpus.fig1(), runs=0)


def test_access_profile_nonnegative():
    with pytest.raises(ValueError):
        AccessProfile({"a": -1})


def test_pct_plan_shape():
    plan = plan_pct(3, 20, 4, seed=1)
    assert sorted(plan.priorities) == [4, 5, 6]
    assert len(plan.points) == 3 and len(set(plan.points)) == 3
    assert all(1 <= p <= 20 for p in plan.points)


def test_pct_plan_depth_one_has_no_points():
    assert plan_pct(2, 10, 1, seed=0).points == ()
    assert plan_pctvb(2, 1, 0, AccessProfile({"a": 3}), seed=0, var_set=("a",)).points == ()


def test_pct_plan_caps_points_at_k():
    assert len(plan_pct(2, 2, 5, seed=0).points) == 2


def test_pctvb_plan_points_on_chosen_site():
    prof = AccessProfile({"a": 3, "b": 4, "c": 0})
    plan = plan_pctvb(2, 3, 1, prof, seed=2)
    (site,) = plan.var_set
    assert all(q == site and 1 <= j <= prof.k[q] for q, j in plan.points)


def test_pctvb_needs_v_below_d():
    with pytest.raises(ValueError):
        plan_pctvb(2, 2, 2, AccessProfile({"a": 1, "b": 1}), seed=0)


def test_change_point_lowers_priority():
    # T0 starts high, first access of a drops it below T1, so T1 increments in between
    plan = ChangePointPlan((3, 2, 4), (("a", 1),), ("a",))
    r = run_plan(corpus.fig2(), plan)
    assert r.assertion_failed


def test_unreached_change_point_never_fires():
    plan = ChangePointPlan((2, 3, 4), (("a", 99),), ("a",))
    assert not run_plan(corpus.fig2(), plan).buggy


def test_fig2_hit_rates_near_bound():
    prog = corpus.fig2()
    pct = hit_rate(prog, PCT(d=2), 3000, seed=1)
    vb = hit_rate(prog, PCTVB(d=2, var_set=("a",)), 3000, seed=1)
    want = pct_bound(prog.n, 3, 2)
    sigma = math.sqrt(want * (1 - want) / 3000)
    assert abs(pct - want) < 4 * sigma and abs(vb - want) < 4 * sigma


def test_bug_free_program_times_out():
    stats = executions_to_bug(corpus.locked_increment(), PCT(d=2), max_runs=30, trials=3)
    assert stats.timed_out == 3 and stats.mean is None
    assert stats.rows()[1] == "0,30,0"


def test_exhaustive_finds_fig3():
    stats = executions_to_bug(corpus.fig3(), Exhaustive(2, 1, 2), max_runs=500, trials=2)
    assert stats.timed_out == 0 and stats.strategy == "exhaustive-2,1,2"


def test_unbounded_finds_fig1():
    stats = executions_to_bug(corpus.fig1(), Exhaustive(0, bounded=False), 100, trials=3)
    assert all(1 <= c <= 2 for c in stats.found)


def test_trials_deterministic_per_seed():
    a = executions_to_bug(corpus.fig2(), PCT(d=2), 200, trials=4, seed=9)
    b = executions_to_bug(corpus.fig2(), PCT(d=2), 200, trials=4, seed=9)
    assert a.counts == b.counts


def test_trial_seeds_distinct():
    s = trial_seeds(0, 50)
    assert len(set(s)) == 50 and s == trial_seeds(0, 50)


def test_trial_stats_mean():
    st = TrialStats("x", 10, [2, None, 4])
    assert st.mean == 3 and st.timed_out == 1


def test_pct_plans_are_uniform_over_first_thread():
    rng = np.random.default_rng(0)
    tops = [int(np.argmax(plan_pct(3, 5, 2, rng).priorities)) for _ in range(3000)]
    counts = np.bincount(tops, minlength=3)
    assert (abs(counts - 1000) < 120).all()
