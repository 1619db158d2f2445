"""Margin bookkeeping, Gale-Ryser feasibility and first-column constraint sets.

A first column ``x`` of a binary matrix with margins ``(r, c)`` is admissible
exactly when ``(r - x, c[1:])`` is still Gale-Ryser feasible.  The constraint
sets built here encode that condition as a permutation ``pi`` of the rows,
per-position allowed values ``A[i]`` and bounds ``B[i] = [lo[i], hi[i]]`` on the
running sums ``x[pi[0]] + ... + x[pi[i]]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

import numpy as np


class MarginsError(ValueError):
    """Malformed margins (negative entries, entries too large, sum mismatch)."""


class InfeasibleMarginsError(ValueError):
    """No binary matrix has the requested margins."""


class UnsupportedPatternError(ValueError):
    """Zero pattern has more than one structural zero in some row or column."""


@dataclass(frozen=True)
class Margins:
    """Row sums ``r`` (length m) and column sums ``c`` (length n)."""

    r: tuple[int, ...]
    c: tuple[int, ...]

    def __init__(self, r: Sequence[int], c: Sequence[int]):
        r = tuple(int(v) for v in r)
        c = tuple(int(v) for v in c)
        m, n = len(r), len(c)
        if any(v < 0 or v > n for v in r):
            raise MarginsError(f"row sums must lie in [0, {n}]: {r}")
        if any(v < 0 or v > m for v in c):
            raise MarginsError(f"column sums must lie in [0, {m}]: {c}")
        if sum(r) != sum(c):
            raise MarginsError(f"sum(r)={sum(r)} differs from sum(c)={sum(c)}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", c)

    @property
    def m(self) -> int:
        return len(self.r)

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def d(self) -> int:
        return sum(self.r)

    def transpose(self) -> "Margins":
        return Margins(self.c, self.r)


def conjugate(c: Sequence[int], m: int) -> np.ndarray:
    """Conjugate vector ``cc[l-1] = #{j : c_j >= l}`` for ``l = 1..m``.

    Entries ``c_j >= m`` are clamped into the last bucket.
    """
    counts = np.zeros(m + 1, dtype=np.int64)
    for v in c:
        v = int(v)
        if v >= 1:
            counts[min(v, m)] += 1
    # reverse cumulative sum over buckets 1..m
    return np.cumsum(counts[:0:-1])[::-1].copy()


def sort_rows(r: Sequence[int], keys: Sequence[int] | None = None) -> np.ndarray:
    """Row permutation sorting ``r`` descending; ties by ``keys`` then index."""
    r = np.asarray(r, dtype=np.int64)
    if keys is None:
        return np.lexsort((np.arange(len(r)), -r)).astype(np.int64)
    keys = np.asarray(keys, dtype=np.int64)
    return np.lexsort((np.arange(len(r)), keys, -r)).astype(np.int64)


def gale_ryser_feasible(margins: Margins) -> bool:
    r_sorted = np.sort(np.asarray(margins.r, dtype=np.int64))[::-1]
    cc = conjugate(margins.c, margins.m)
    return bool(np.all(np.cumsum(r_sorted) <= np.cumsum(cc)))


@dataclass(frozen=True)
class ConstraintSet:
    """Hard constraints on the first column.

    ``pi`` orders the rows.  Position ``i`` (0-based) may take the values in
    ``A[i]`` and the running sum after it must lie in ``[lo[i], hi[i]]``.
    ``b`` holds the raw lower-bound quantities before clipping at zero.
    """

    pi: np.ndarray
    A: tuple[frozenset, ...]
    lo: np.ndarray
    hi: np.ndarray
    b: np.ndarray

    @property
    def m(self) -> int:
        return len(self.pi)

    @property
    def c1(self) -> int:
        return int(self.hi[-1])

    @classmethod
    def unconstrained(cls, m: int, c1: int) -> "ConstraintSet":
        """Only the column-sum constraint; every row may be 0 or 1."""
        lo = np.zeros(m, dtype=np.int64)
        lo[-1] = c1
        return cls(
            pi=np.arange(m, dtype=np.int64),
            A=tuple(frozenset((0, 1)) for _ in range(m)),
            lo=lo,
            hi=np.full(m, c1, dtype=np.int64),
            b=lo.copy(),
        )

    def with_forced(self, ones=(), zeros=()) -> "ConstraintSet":
        """Copy with the given original row indices restricted to 1 or 0."""
        ones, zeros = set(int(i) for i in ones), set(int(i) for i in zeros)
        A = []
        for pos, row in enumerate(self.pi):
            allowed = self.A[pos]
            if row in ones:
                allowed = allowed & {1}
            if row in zeros:
                allowed = allowed & {0}
            A.append(frozenset(allowed))
        return ConstraintSet(self.pi, tuple(A), self.lo, self.hi, self.b)

    def contains(self, x: Sequence[int]) -> bool:
        s = 0
        for pos, row in enumerate(self.pi):
            xi = int(x[row])
            if xi not in self.A[pos]:
                return False
            s += xi
            if not self.lo[pos] <= s <= self.hi[pos]:
                return False
        return True

    def members(self) -> Iterator[tuple[int, ...]]:
        """Enumerate the admissible columns (exponential in m; tests only)."""
        for x in product((0, 1), repeat=self.m):
            if self.contains(x):
                yield x


def _bounds(b: np.ndarray, c1: int) -> tuple[np.ndarray, np.ndarray]:
    lo = np.maximum(b, 0)
    lo[-1] = c1
    hi = np.full(len(b), c1, dtype=np.int64)
    return lo, hi


def build_constraints(margins: Margins) -> ConstraintSet:
    """Constraint set whose admissible columns are exactly the first-column support."""
    if not gale_ryser_feasible(margins):
        raise InfeasibleMarginsError("Gale-Ryser infeasible: empty support")
    m, n = margins.m, margins.n
    r = np.asarray(margins.r, dtype=np.int64)
    c1 = margins.c[0]
    pi = sort_rows(r)
    cc_rest = conjugate(margins.c[1:], m)
    b = np.cumsum(r[pi] - cc_rest)
    A = []
    for v in r[pi]:
        if v == 0:
            A.append(frozenset((0,)))
        elif v == n:
            A.append(frozenset((1,)))
        else:
            A.append(frozenset((0, 1)))
    lo, hi = _bounds(b, c1)
    return ConstraintSet(pi=pi, A=tuple(A), lo=lo, hi=hi, b=b)


def check_zero_pattern(a: np.ndarray) -> None:
    a = np.asarray(a)
    m, n = a.shape
    if np.any(a.sum(axis=1) < n - 1) or np.any(a.sum(axis=0) < m - 1):
        raise UnsupportedPatternError(
            "pattern unsupported, fall back to general-zeros path"
        )


def build_constraints_structural(margins: Margins, a: np.ndarray) -> ConstraintSet:
    """Exact first-column support when each row and column has at most one zero.

    Columns must already be ordered by nonincreasing sum.  ``a`` is the 0/1
    support pattern of the weights for the current columns.
    """
    a = np.asarray(a, dtype=np.int64)
    m, n = margins.m, margins.n
    if a.shape != (m, n):
        raise ValueError(f"pattern shape {a.shape} does not match ({m}, {n})")
    check_zero_pattern(a)
    c = np.asarray(margins.c, dtype=np.int64)
    if np.any(np.diff(c) > 0):
        raise ValueError("columns must be ordered by nonincreasing sum")
    r = np.asarray(margins.r, dtype=np.int64)
    c1 = int(c[0])

    # y_i: 1-based column of the row's zero, n+1 when the row has none
    y = np.full(m, n + 1, dtype=np.int64)
    rows, cols = np.nonzero(a == 0)
    y[rows] = cols + 1
    pi = sort_rows(r, keys=y)

    row_support = a.sum(axis=1)
    # tail[j] = sum_{k > j} c_k for 0-based j; partial[j] accumulates a over columns 1..j
    tail = np.concatenate([np.cumsum(c[::-1])[::-1][1:], [0]])
    partial = np.zeros(n, dtype=np.int64)
    b = np.empty(m, dtype=np.int64)
    rsum = 0
    A = []
    for pos, row in enumerate(pi):
        rsum += r[row]
        partial[1:] += np.cumsum(a[row, 1:])
        b[pos] = rsum - int(np.min(tail + partial))
        eff = a[row, 0] * r[row]
        if eff == 0:
            A.append(frozenset((0,)))
        elif eff == row_support[row]:
            A.append(frozenset((1,)))
        else:
            A.append(frozenset((0, 1)))
    lo, hi = _bounds(b, c1)
    return ConstraintSet(pi=pi, A=tuple(A), lo=lo, hi=hi, b=b)
