"""Random permutations that cover every relative ordering of every t-subset.

A permutation of ``n`` items *covers* an ordering of a t-subset when that
ordering appears in it as a subsequence. Independent uniform permutations
cover everything with probability at least ``1 - epsilon`` after
:func:`required_permutations` draws. :class:`CoverageState` tracks which
orderings have been seen, exhaustively for small ``n`` or over a fixed random
sample of subsets otherwise.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

DEFAULT_SUBSET_SAMPLE = 100_000
EXHAUSTIVE_LIMIT = 200_000  # max C(n, t) tracked exhaustively


class CoverageStall(RuntimeError):
    pass


def required_permutations(n: int, t: int, epsilon: float) -> int:
    if not 1 <= t <= n:
        raise ValueError(f"need 1 <= t <= n, got n={n}, t={t}")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    return math.ceil(math.factorial(t + 1) * (math.log(n * t) + math.log(1 / epsilon)))


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform permutation of 0..n-1 (Fisher-Yates via numpy)."""
    return rng.permutation(n)


def _ordering_codes(t: int) -> np.ndarray:
    """Map base-t digit codes of argsort rows to 0..t!-1 (or -1 if not a permutation)."""
    table = np.full(t**t, -1, dtype=np.int64)
    for k, p in enumerate(itertools.permutations(range(t))):
        code = 0
        for d in p:
            code = code * t + d
        table[code] = k
    return table


@dataclass
class CoverageState:
    n: int
    t: int
    subsets: np.ndarray  # (m, t) item indices, each row sorted
    seen: np.ndarray = field(init=False)  # (m, t!) bool
    sampled: bool = False

    def __post_init__(self) -> None:
        self.seen = np.zeros((len(self.subsets), math.factorial(self.t)), dtype=bool)
        self._codes = _ordering_codes(self.t)
        self._weights = self.t ** np.arange(self.t - 1, -1, -1)

    @classmethod
    def new(
        cls, n: int, t: int, subset_sample: int | None = None, seed: int = 0
    ) -> CoverageState:
        """Track all C(n, t) subsets, or ``subset_sample`` random ones if given or needed."""
        if not 1 <= t <= n:
            raise ValueError(f"need 1 <= t <= n, got n={n}, t={t}")
        total = math.comb(n, t)
        if subset_sample is None and total > EXHAUSTIVE_LIMIT:
            subset_sample = DEFAULT_SUBSET_SAMPLE
        if subset_sample is None or subset_sample >= total:
            subsets = np.array(list(itertools.combinations(range(n), t)), dtype=np.int64)
            return cls(n, t, subsets.reshape(-1, t))
        rng = np.random.default_rng(seed)
        rows = np.sort(rng.integers(0, n, size=(subset_sample, t)), axis=1)
        while True:
            bad = (np.diff(rows, axis=1) == 0).any(axis=1)
            if not bad.any():
                break
            rows[bad] = np.sort(rng.integers(0, n, size=(int(bad.sum()), t)), axis=1)
        return cls(n, t, rows, sampled=True)

    @property
    def universe_size(self) -> int:
        return self.seen.size

    @property
    def covered(self) -> int:
        return int(self.seen.sum())

    @property
    def complete(self) -> bool:
        return bool(self.seen.all())

    def update(self, perm: Sequence[int] | np.ndarray) -> CoverageState:
        """Record the orderings ``perm`` induces on every tracked subset (in place)."""
        perm = np.asarray(perm)
        pos = np.empty(self.n, dtype=np.int64)
        pos[perm] = np.arange(self.n)
        order = np.argsort(pos[self.subsets], axis=1, kind="stable")
        codes = self._codes[order @ self._weights]
        self.seen[np.arange(len(self.subsets)), codes] = True
        return self


def update_coverage(state: CoverageState, perm: Sequence[int]) -> CoverageState:
    return state.update(perm)


def covers(perms: Iterable[Sequence[int]], n: int, t: int) -> bool:
    state = CoverageState.new(n, t)
    for p in perms:
        state.update(p)
    return state.complete


def simulate_to_coverage(
    n: int,
    t: int,
    epsilon: float = 0.01,
    seed: int = 0,
    subset_sample: int | None = None,
) -> int:
    """Draw uniform permutations until coverage is complete; returns how many it took."""
    rng = np.random.default_rng(seed)
    state = CoverageState.new(n, t, subset_sample, seed=seed + 1)
    cap = 100 * required_permutations(n, t, epsilon)
    count = 0
    while not state.complete:
        if count >= cap:
            raise CoverageStall(f"coverage incomplete after {count} permutations")
        state.update(random_permutation(n, rng))
        count += 1
    return count
