"""Asymptotic enumeration approximations and the per-row odds factors ``u``.

Everything is returned in the log domain: counts of interest routinely exceed
``1e2000``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln


def falling_factorial_sum(t: Sequence[int], ell: int) -> int:
    """``sum_i t_i (t_i - 1) ... (t_i - ell + 1)`` as an exact integer."""
    total = 0
    for v in t:
        v = int(v)
        term = 1
        for k in range(ell):
            term *= v - k
        total += term
    return total


def _log_binom(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


@dataclass(frozen=True)
class ApproxContext:
    """Summary statistics feeding both enumeration approximations.

    ``eta``, ``nu`` are evaluated on the column sums alone, ``mu`` on the
    row sums against the column total.  The Greenhill coefficients follow
    the convention ``0/0 = 0``.
    """

    m: int
    n: int
    total: int
    eta: float
    mu: float
    nu: float
    alpha1: float
    alpha2: float
    alpha3: float
    r2: int
    r3: int
    c1: int
    c2: int
    c3: int

    @classmethod
    def from_margins(cls, r: Sequence[int], c: Sequence[int]) -> "ApproxContext":
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        m, n = len(r), len(c)
        total = int(c.sum())
        eta = _eta(m, n, total)
        mu = eta * float(np.sum((r - total / m) ** 2)) if m else 0.0
        nu = eta * float(np.sum((c - total / n) ** 2)) if n else 0.0
        c2 = falling_factorial_sum(c, 2)
        c3 = falling_factorial_sum(c, 3)
        a1, a2, a3 = greenhill_alphas(total, c2, c3)
        return cls(m, n, total, eta, mu, nu, a1, a2, a3,
                   falling_factorial_sum(r, 2), falling_factorial_sum(r, 3),
                   total, c2, c3)


def _eta(m: int, n: int, total: int) -> float:
    mn = m * n
    if total <= 0 or total >= mn:
        return 0.0
    return mn / (total * (mn - total))


def _div(a: float, b: float) -> float:
    return 0.0 if b == 0 else a / b


def greenhill_alphas(c1: int, c2: int, c3: int) -> tuple[float, float, float]:
    """Coefficients of the sparse-regime correction, from ``[c]_1, [c]_2, [c]_3``."""
    c1 = float(c1)
    a1 = _div(c2, 2 * c1**2) + _div(c2, 2 * c1**3) + _div(c2**2, 4 * c1**4)
    a2 = -_div(c3, 3 * c1**3) + _div(c2**2, 2 * c1**4)
    a3 = _div(c2, 4 * c1**4) + _div(c3, 2 * c1**4) - _div(c2**2, 2 * c1**5)
    return a1, a2, a3


def log_n_canfield(r: Sequence[int], c: Sequence[int]) -> float:
    """Log of the dense-regime approximation to the number of binary matrices.

    ``r`` and ``c`` need not have equal sums; the formula is written
    asymmetrically and uses the column total throughout, which is what the
    ratio form of ``u`` relies on.
    """
    r = np.asarray(r, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    m, n = len(r), len(c)
    if np.any(r < 0) or np.any(r > n) or np.any(c < 0) or np.any(c > m):
        raise ValueError("margin entries out of range")
    total = int(c.sum())
    if total == 0 or total == m * n:
        return 0.0
    ctx = ApproxContext.from_margins(r, c)
    val = (
        -_log_binom(m * n, total)
        + np.sum(_log_binom(n, r))
        + np.sum(_log_binom(m, c))
        - 0.5 * (1 - ctx.mu) * (1 - ctx.nu)
    )
    return float(val)


def log_n_greenhill(r: Sequence[int], c: Sequence[int]) -> float:
    """Log of the sparse-regime approximation to the number of binary matrices."""
    r = np.asarray(r, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    total = int(c.sum())
    a1, a2, a3 = greenhill_alphas(total, falling_factorial_sum(c, 2),
                                  falling_factorial_sum(c, 3))
    r2 = falling_factorial_sum(r, 2)
    r3 = falling_factorial_sum(r, 3)
    val = (
        gammaln(total + 1)
        - np.sum(gammaln(r + 1))
        - np.sum(gammaln(c + 1))
        - a1 * r2 - a2 * r3 - a3 * r2**2
    )
    return float(val)


def _forced(r: np.ndarray, n: int) -> np.ndarray:
    return (r == 0) | (r == n)


def log_u_canfield(r: Sequence[int], c_rest: Sequence[int], n: int) -> np.ndarray:
    """Log odds factors ``log u_i`` for the current first column.

    ``n`` is the current number of columns (including the one being sampled)
    and ``c_rest`` the sums of the columns after it.  Forced rows get 0.
    """
    r = np.asarray(r, dtype=np.int64)
    c_rest = np.asarray(c_rest, dtype=np.int64)
    m = len(r)
    n1 = n - 1
    count = int(c_rest.sum())
    if count == 0 or count == m * n1:
        expo = 0.0
    else:
        eta = m * n1 / (count * (m * n1 - count))
        nu = eta * (float(np.sum(c_rest.astype(float) ** 2)) - count**2 / n1)
        expo = eta * (1 - nu)
    out = np.zeros(m)
    free = ~_forced(r, n)
    rf = r[free].astype(float)
    out[free] = np.log(rf) - np.log(n - rf) + expo * (0.5 - rf + count / m)
    return out


def log_u_greenhill(r: Sequence[int], c_rest: Sequence[int], n: int | None = None
                    ) -> np.ndarray:
    """Sparse-regime log odds factors; forced rows (``r_i`` in ``{0, n}``) get 0."""
    r = np.asarray(r, dtype=np.int64)
    c_rest = np.asarray(c_rest, dtype=np.int64)
    if n is None:
        n = len(c_rest) + 1
    a1, a2, a3 = greenhill_alphas(int(c_rest.sum()), falling_factorial_sum(c_rest, 2),
                                  falling_factorial_sum(c_rest, 3))
    r2 = falling_factorial_sum(r, 2)
    out = np.zeros(len(r))
    free = ~_forced(r, n)
    rf = r[free].astype(float)
    out[free] = np.log(rf) + (rf - 1) * (
        2 * a1 + 3 * a2 * (rf - 2) + 4 * a3 * (r2 - rf + 1)
    )
    return out


def log_n_structural(r: Sequence[int], c: Sequence[int], a: np.ndarray) -> float:
    """Dense-regime approximation with a structural-zero pattern ``a``."""
    r = np.asarray(r, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    a = np.asarray(a, dtype=np.int64)
    m, n = a.shape
    total = int(c.sum())
    R = a.sum(axis=1)
    C = a.sum(axis=0)
    S = int(a.sum())
    if total == 0 or total == S:
        return 0.0
    ctx = ApproxContext.from_margins(r, c)
    rr = r - R * total / (m * n)
    cc = c - C * total / (m * n)
    delta = ctx.eta * float(np.sum((1 - a) * np.outer(rr, cc)))
    val = (
        -_log_binom(S, total)
        + np.sum(_log_binom(R, r))
        + np.sum(_log_binom(C, c))
        - 0.5 * (1 - ctx.mu) * (1 - ctx.nu)
        - delta
    )
    return float(val)


def log_u_structural(r: Sequence[int], c_rest: Sequence[int], a: np.ndarray
                     ) -> np.ndarray:
    """Odds factors adjusted for structural zeros.

    ``a`` is the support pattern of the current submatrix (first column
    included).  Rows with ``r_i = 0`` or ``r_i = R_i(a[:, 1:]) + 1`` get 0.
    """
    r = np.asarray(r, dtype=np.int64)
    c_rest = np.asarray(c_rest, dtype=np.int64)
    a = np.asarray(a, dtype=np.int64)
    m, n = a.shape
    n1 = n - 1
    a_rest = a[:, 1:]
    R_rest = a_rest.sum(axis=1)
    C_rest = a_rest.sum(axis=0)
    count = int(c_rest.sum())
    if count == 0 or count == m * n1:
        eta = 0.0
        nu = 0.0
    else:
        eta = m * n1 / (count * (m * n1 - count))
        nu = eta * (float(np.sum(c_rest.astype(float) ** 2)) - count**2 / n1)
    out = np.zeros(m)
    for i in range(m):
        ri = int(r[i])
        if ri == 0 or ri == R_rest[i] + 1:
            continue
        zero_term = 0.0
        if n1 > 0:
            zero_term = float(np.sum((1 - a_rest[i]) *
                                     (c_rest - C_rest * count / (m * n1))))
        out[i] = (np.log(ri) - np.log(R_rest[i] - ri + 1)
                  + eta * ((1 - nu) * (0.5 - ri + count / m) + zero_term))
    return out
