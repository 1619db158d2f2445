"""Exact ground truth for small or specially structured instances.

Nothing here touches the sampler code paths: feasibility checks, column
enumeration and counting are implemented from scratch.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from numbers import Rational
from typing import Sequence

import numpy as np

MINSTD_MODULUS = 2**31 - 1
MINSTD_MULTIPLIER = 16807

FINCH_R = (14, 13, 14, 10, 12, 2, 10, 1, 10, 11, 6, 2, 17)
FINCH_C = (4, 4, 11, 10, 10, 8, 9, 10, 8, 9, 3, 10, 4, 7, 9, 3, 3)


@dataclass(frozen=True)
class ExactCount:
    """Exact value as an int or Fraction."""

    value: object
    method: str

    @property
    def log(self) -> float:
        v = self.value
        if v == 0:
            return -math.inf
        if isinstance(v, Fraction):
            return math.log(v.numerator) - math.log(v.denominator)
        return math.log(v)

    @property
    def log10(self) -> float:
        return self.log / math.log(10)

    def __int__(self) -> int:
        return int(self.value)


class EnumerationCapError(RuntimeError):
    pass


def _feasible(r: Sequence[int], c: Sequence[int]) -> bool:
    """Gale-Ryser test written out directly on sorted sequences."""
    if sum(r) != sum(c):
        return False
    rs = sorted(r, reverse=True)
    m = len(rs)
    lhs = 0
    for k in range(1, m + 1):
        lhs += rs[k - 1]
        rhs = sum(min(cj, k) for cj in c)
        if lhs > rhs:
            return False
    return True


def _as_rc(margins):
    return tuple(int(v) for v in margins.r), tuple(int(v) for v in margins.c)


def enumerate_omega(margins, zero_pattern=None, cap: int = 10**7) -> list[np.ndarray]:
    """All binary matrices with the given margins (and support, if given).

    Depth-first over columns, pruning partial fills whose remaining margins
    fail Gale-Ryser.  Raises :class:`EnumerationCapError` past ``cap`` results.
    """
    r, c = _as_rc(margins)
    m, n = len(r), len(c)
    allowed = None if zero_pattern is None else np.asarray(zero_pattern) != 0
    out: list[np.ndarray] = []
    z = np.zeros((m, n), dtype=np.int8)
    if not _feasible(r, c):
        return out

    def rec(j: int, res: tuple[int, ...]):
        if j == n:
            if not any(res):
                out.append(z.copy())
                if len(out) > cap:
                    raise EnumerationCapError(f"more than {cap} matrices")
            return
        rows = [i for i in range(m) if res[i] > 0 and (allowed is None or allowed[i, j])]
        for pick in combinations(rows, c[j]):
            nxt = list(res)
            for i in pick:
                nxt[i] -= 1
            if not _feasible(nxt, c[j + 1:]):
                continue
            for i in pick:
                z[i, j] = 1
            rec(j + 1, tuple(nxt))
            for i in pick:
                z[i, j] = 0

    rec(0, r)
    return out


def _exact_number(x):
    if isinstance(x, (int, Fraction)):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(float(x))


def exact_kappa(margins, w=None) -> ExactCount:
    """Sum over all matrices with the margins of ``prod w^z``, exactly.

    Float weights are converted to their exact binary fractions, so the
    result is the exact value of the sum for the weights as stored.
    Memoized over (column, residual row sums).
    """
    r, c = _as_rc(margins)
    m, n = len(r), len(c)
    if w is None:
        return count_matrices(margins)
    W = np.asarray(getattr(w, "w", w), dtype=object)
    if W.shape != (m, n):
        raise ValueError("weight matrix shape does not match the margins")
    Wx = [[_exact_number(W[i, j]) for j in range(n)] for i in range(m)]

    @lru_cache(maxsize=None)
    def rec(j: int, res: tuple[int, ...]):
        if j == n:
            return 1 if not any(res) else 0
        total = 0
        rows = [i for i in range(m) if res[i] > 0 and Wx[i][j] != 0]
        for pick in combinations(rows, c[j]):
            nxt = list(res)
            prod = 1
            for i in pick:
                nxt[i] -= 1
                prod *= Wx[i][j]
            nxt = tuple(nxt)
            if not _feasible(nxt, c[j + 1:]):
                continue
            total += prod * rec(j + 1, nxt)
        return total

    if not _feasible(r, c):
        return ExactCount(0, "enumeration")
    return ExactCount(rec(0, r), "enumeration")


def count_matrices(margins) -> ExactCount:
    """Number of binary matrices with the margins.

    Column-by-column transfer over the multiset of residual row sums: rows
    with equal residuals are interchangeable, so a column choice is a vector
    of how many rows to take from each residual class.
    """
    r, c = _as_rc(margins)
    c_sorted = tuple(sorted(c, reverse=True))
    n = len(c_sorted)

    @lru_cache(maxsize=None)
    def rec(j: int, res: tuple[int, ...]):
        if j == n:
            return 1 if not any(res) else 0
        if not _feasible(res, c_sorted[j:]):
            return 0
        classes = sorted(Counter(v for v in res if v > 0).items())
        zeros = sum(1 for v in res if v == 0)
        total = 0

        def pick(idx: int, need: int, mult: int, taken: list):
            nonlocal total
            if idx == len(classes):
                if need:
                    return
                nxt = [0] * zeros
                for (v, cnt), k in zip(classes, taken):
                    nxt += [v - 1] * k + [v] * (cnt - k)
                total += mult * rec(j + 1, tuple(sorted(nxt, reverse=True)))
                return
            v, cnt = classes[idx]
            for k in range(min(cnt, need) + 1):
                pick(idx + 1, need - k, mult * math.comb(cnt, k), taken + [k])

        pick(0, c_sorted[j], 1, [])
        return total

    return ExactCount(rec(0, tuple(sorted(r, reverse=True))), "recursion")


def finch_count() -> ExactCount:
    from .margins import Margins
    return count_matrices(Margins(FINCH_R, FINCH_C))


def exact_permanent(w) -> ExactCount:
    """Ryser's formula with Gray-code updates; exact for int/Fraction input."""
    W = np.asarray(getattr(w, "w", w), dtype=object)
    n = W.shape[0]
    if W.ndim != 2 or W.shape[1] != n:
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return ExactCount(1, "closed_form")
    Wx = [[_exact_number(W[i, j]) for j in range(n)] for i in range(n)]
    row_sums = [0] * n
    total = 0
    gray_prev = 0
    for k in range(1, 2**n):
        gray = k ^ (k >> 1)
        diff = gray ^ gray_prev
        j = diff.bit_length() - 1
        sign = 1 if gray & diff else -1
        for i in range(n):
            row_sums[i] += sign * Wx[i][j]
        gray_prev = gray
        prod = 1
        for s in row_sums:
            prod *= s
            if prod == 0:
                break
        size = bin(gray).count("1")
        total += prod if (n - size) % 2 == 0 else -prod
    return ExactCount(total, "closed_form")


def two_regular_count(n: int) -> ExactCount:
    """Number of ``n x n`` binary matrices with every row and column sum 2."""
    if n < 1:
        raise ValueError("n must be positive")
    H = {1: 0, 2: 1, 3: 6}
    for k in range(4, n + 1):
        H[k] = k * (k - 1) ** 2 * ((2 * k - 3) * H[k - 2] + (k - 2) ** 2 * H[k - 3]) // 2
    return ExactCount(H[n], "recursion")


def const_alpha_permanent(n: int, b, alpha) -> ExactCount:
    """Alpha-permanent of the ``n x n`` matrix with every entry ``b``.

    Equals ``b^n * alpha (alpha + 1) ... (alpha + n - 1)``.  Float inputs are
    taken at their exact binary value, so the result is always exact.
    """
    if n < 1:
        raise ValueError("n must be positive")
    a = _exact_number(alpha)
    val = _exact_number(b) ** n
    for i in range(n):
        val *= a + i
    if isinstance(val, Fraction) and val.denominator == 1:
        val = val.numerator
    return ExactCount(val, "closed_form")


def bezakova_count(m: int, n: int, R: int, C: int) -> ExactCount:
    """Matrices with row sums ``(R, 1, ..., 1)`` and column sums ``(C, 1, ..., 1)``.

    Conditioning on the corner entry gives two terms.
    """
    if R + m - 1 != C + n - 1:
        raise ValueError("margins do not have equal totals")
    t0 = math.comb(n - 1, R) * math.comb(m - 1, C) * math.factorial(m - 1 - C) \
        if m - 1 - C >= 0 else 0
    t1 = math.comb(n - 1, R - 1) * math.comb(m - 1, C - 1) * math.factorial(m - C) \
        if R >= 1 and C >= 1 else 0
    return ExactCount(t0 + t1, "closed_form")


def minstd_canonical(m: int, n: int) -> np.ndarray:
    """``y[i, j] = R(j*m + i + 1) / (2^31 - 1)`` with the MINSTD recursion."""
    out = np.empty((m, n))
    x = 1
    for j in range(n):
        for i in range(m):
            x = (MINSTD_MULTIPLIER * x) % MINSTD_MODULUS
            out[i, j] = x / MINSTD_MODULUS
    return out


def minstd_sequence(k: int) -> list[int]:
    """``R(1), ..., R(k)`` as integers."""
    out, x = [], 1
    for _ in range(k):
        x = (MINSTD_MULTIPLIER * x) % MINSTD_MODULUS
        out.append(x)
    return out


def weight_class(y, cls: str) -> np.ndarray:
    """Weight families built from a canonical matrix ``y``.

    ``I``: ones, ``II``: ``y + 1``, ``III``: ``y``, ``IV``: ``-log y`` with
    entries where ``y >= 0.99`` set to zero.
    """
    y = np.asarray(y, dtype=float)
    cls = cls.upper()
    if cls == "I":
        return np.ones_like(y)
    if cls == "II":
        return y + 1.0
    if cls == "III":
        return y.copy()
    if cls == "IV":
        out = np.zeros_like(y)
        mask = y < 0.99
        out[mask] = -np.log(y[mask])
        return out
    raise ValueError(f"unknown weight class {cls!r}")
