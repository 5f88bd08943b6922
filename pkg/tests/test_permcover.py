from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from vtbound.permcover import (
    CoverageStall,
    CoverageState,
    covers,
    required_permutations,
    simulate_to_coverage,
    update_coverage,
)


def test_required_permutations_n600_t3():
    assert required_permutations(600, 3, 0.01) == 291


def test_required_permutations_matches_formula():
    for n, t, eps in [(10, 2, 0.1), (50, 4, 0.001), (5, 5, 0.5)]:
        want = math.ceil(math.factorial(t + 1) * (math.log(n * t) + math.log(1 / eps)))
        assert required_permutations(n, t, eps) == want


def test_required_permutations_logarithmic_in_n():
    a, b, c = (required_permutations(n, 3, 0.01) for n in (100, 1000, 10000))
    assert b - a == pytest.approx(c - b, abs=2)


def test_t1_positive():
    assert required_permutations(7, 1, 0.5) > 0


def test_two_extreme_orders_cover_pairs():
    state = CoverageState.new(3, 2)
    update_coverage(state, (0, 1, 2))
    update_coverage(state, (2, 1, 0))
    assert state.complete


def test_one_permutation_covers_one_ordering_of_three():
    state = CoverageState.new(3, 3)
    state.update((1, 0, 2))
    assert state.covered == 1 and state.universe_size == 6


def test_duplicate_permutation_changes_nothing():
    state = CoverageState.new(5, 3)
    state.update((4, 2, 0, 1, 3))
    before = state.seen.copy()
    state.update((4, 2, 0, 1, 3))
    assert (state.seen == before).all()


def test_coverage_matches_brute_force():
    rng = np.random.default_rng(5)
    perms = [tuple(rng.permutation(5)) for _ in range(7)]
    state = CoverageState.new(5, 3)
    for p in perms:
        state.update(p)
    brute = set()
    for p in perms:
        pos = {x: i for i, x in enumerate(p)}
        for sub in itertools.combinations(range(5), 3):
            brute.add((sub, tuple(sorted(sub, key=pos.get))))
    assert state.covered == len(brute)


def test_all_permutations_cover_everything():
    assert covers(itertools.permutations(range(4)), 4, 3)


def test_sampled_state_is_flagged():
    state = CoverageState.new(600, 3, subset_sample=1000, seed=1)
    assert state.sampled and len(state.subsets) == 1000
    assert (np.diff(state.subsets, axis=1) > 0).all()


def test_simulate_small_never_below_two():
    for seed in range(20):
        assert simulate_to_coverage(4, 2, seed=seed) >= 2


def test_simulate_stall_diagnostic(monkeypatch):
    # a broken generator that always returns the identity can never finish
    monkeypatch.setattr("vtbound.permcover.random_permutation", lambda n, rng: np.arange(n))
    with pytest.raises(CoverageStall):
        simulate_to_coverage(4, 2, seed=0)
