"""Exact combinatorial optima by exhaustive search.

Two independent routes: plain brute force over all assignments (tiny cubes
only), and the subcube reduction for the delta instance, where the optimum is
fixed by a single subset ``V`` of the suffix cube ``Q_{d-k}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Assignment, CubeError, GuardError, HypercubeInstance, popcount

MAX_BRUTE_DIM = 4


def _cut_counts(codes: np.ndarray, d: int) -> np.ndarray:
    """Boundary size of every vertex subset encoded (one bit per vertex) in ``codes``."""
    cut = np.zeros(codes.shape, dtype=np.int64)
    for v in range(1 << d):
        for b in range(d):
            w = v | (1 << b)
            if w != v:
                cut += ((codes >> v) ^ (codes >> w)) & 1
    return cut


def brute_force_opt(instance: HypercubeInstance) -> tuple[Fraction, Assignment]:
    """Minimum unsatisfied fraction over all assignments, with vertex 0 pinned to label 1.

    Ties go to the numerically smallest assignment code.
    """
    d = instance.d
    if d > MAX_BRUTE_DIM:
        raise GuardError(f"brute force is limited to d <= {MAX_BRUTE_DIM}, got d={d}")
    n = 1 << d
    codes = 2 * np.arange(1 << (n - 1), dtype=np.int64) + 1
    lower, upper, bit = instance.edges()
    unsat = np.zeros(codes.shape, dtype=np.int64)
    for u, w, c in zip(lower.tolist(), upper.tolist(), bit.tolist()):
        unsat += (((codes >> u) ^ (codes >> w)) & 1) ^ c
    best = int(np.argmin(unsat))
    return Fraction(int(unsat[best]), instance.n_edges), Assignment.from_int(d, int(codes[best]))


@dataclass(frozen=True, eq=False)
class SubcubeSubset:
    d: int
    members: np.ndarray  # bool, one per vertex of Q_d

    def __post_init__(self):
        m = np.asarray(self.members, dtype=bool)
        if m.shape != (1 << self.d,):
            raise CubeError(f"expected {1 << self.d} membership bits, got {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "members", m)

    @classmethod
    def from_int(cls, d: int, code: int) -> "SubcubeSubset":
        return cls(d, [(code >> v) & 1 for v in range(1 << d)])

    def to_int(self) -> int:
        return sum(1 << int(v) for v in np.flatnonzero(self.members))

    def __eq__(self, other):
        if not isinstance(other, SubcubeSubset):
            return NotImplemented
        return self.d == other.d and np.array_equal(self.members, other.members)

    def __repr__(self):
        return f"SubcubeSubset(d={self.d}, members={np.flatnonzero(self.members).tolist()})"


def half_set(d: int) -> np.ndarray:
    """Membership mask of H_{1/2}: Hamming weight at most d/2."""
    return 2 * popcount(np.arange(1 << d)) <= d


def a_statistic(k: int, d: int, subset: SubcubeSubset) -> int:
    """k * (|V & H| - |V \\ H|) - |boundary(V)|."""
    if k < 1:
        raise CubeError(f"k must be >= 1, got {k}")
    if subset.d != d:
        raise CubeError(f"subset lives in Q_{subset.d}, expected Q_{d}")
    h = half_set(d)
    v = subset.members
    idx = np.arange(1 << d)
    cut = sum(int(np.count_nonzero(v != v[idx ^ (1 << b)])) for b in range(d)) // 2
    return k * (int(np.count_nonzero(v & h)) - int(np.count_nonzero(v & ~h))) - cut


def max_a_statistic(k: int, d: int) -> tuple[int, SubcubeSubset]:
    """Maximum of the statistic over all subsets of Q_d; smallest subset code wins ties."""
    if d > MAX_BRUTE_DIM:
        raise GuardError(f"subset search is limited to d' <= {MAX_BRUTE_DIM}, got {d}")
    if k < 1:
        raise CubeError(f"k must be >= 1, got {k}")
    n = 1 << d
    codes = np.arange(1 << n, dtype=np.int64)
    h = half_set(d)
    score = -_cut_counts(codes, d)
    for v in range(n):
        score += k * (1 if h[v] else -1) * ((codes >> v) & 1)
    best = int(np.argmax(score))
    return int(score[best]), SubcubeSubset.from_int(d, best)


def structured_delta_opt(k: int, d: int) -> Fraction:
    """Combinatorial optimum of delta(k, d) via the subcube reduction.

    Unsatisfied edges = 2^(k-1) * (k*|H| - A*), with A* maximized over V in Q_{d-k}.
    """
    if not 1 <= k <= d:
        raise CubeError(f"need 1 <= k <= d, got k={k}, d={d}")
    sub = d - k
    a_star, _ = max_a_statistic(k, sub)
    h_size = int(np.count_nonzero(half_set(sub)))
    unsat = (1 << (k - 1)) * (k * h_size - a_star)
    return Fraction(unsat, d << (d - 1))
