"""Elementary symmetric polynomial tables and the per-column ``v`` factors."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

NEG_INF = -np.inf


@numba.njit(cache=True)
def _logaddexp(x, y):
    if x == -np.inf:
        return y
    if y == -np.inf:
        return x
    if x > y:
        return x + np.log1p(np.exp(y - x))
    return y + np.log1p(np.exp(x - y))


@numba.njit(cache=True)
def _fill_table(logw, r, offsets, out):
    m, n = logw.shape
    for i in range(m):
        off = offsets[i]
        ri = r[i]
        # column n-1: base case over the single trailing entry
        j = n - 1
        out[j, off] = 0.0
        for k in range(1, ri + 1):
            out[j, off + k] = logw[i, j] if k == 1 else -np.inf
        for j in range(n - 2, -1, -1):
            out[j, off] = 0.0
            lw = logw[i, j]
            for k in range(1, ri + 1):
                out[j, off + k] = _logaddexp(out[j + 1, off + k],
                                             lw + out[j + 1, off + k - 1])


@dataclass(frozen=True)
class GTable:
    """Log elementary symmetric polynomials of each row's trailing weights.

    ``get(i, j, k)`` is the log of the degree-``k`` elementary symmetric
    polynomial of ``logw[i, j:]`` (0-based ``j``), for ``k <= r[i]``.  The
    empty suffix ``j = n`` is handled without storage.
    """

    values: np.ndarray  # shape (n, sum(r + 1))
    offsets: np.ndarray
    r: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def get(self, i: int, j: int, k: int) -> float:
        if k < 0 or k > self.r[i]:
            return NEG_INF
        if j >= self.n:
            return 0.0 if k == 0 else NEG_INF
        return float(self.values[j, self.offsets[i] + k])


def precompute_g(wbar, r) -> GTable:
    """Build the table for balanced weights ``wbar`` (columns already ordered)."""
    W = getattr(wbar, "wbar", wbar)
    W = np.asarray(W, dtype=float)
    r = np.asarray(r, dtype=np.int64)
    m, n = W.shape
    if len(r) != m:
        raise ValueError("row sums do not match the weight matrix")
    with np.errstate(divide="ignore"):
        logw = np.log(W)
    offsets = np.zeros(m, dtype=np.int64)
    offsets[1:] = np.cumsum(r + 1)[:-1]
    values = np.full((n, int(np.sum(r + 1))), NEG_INF)
    if n > 0:
        _fill_table(logw, r, offsets, values)
    return GTable(values=values, offsets=offsets, r=r)


def v_weights(g: GTable, wbar, r_current, j: int, n_total: int | None = None):
    """Log ``v`` for column ``j`` (0-based, in sampling order).

    Returns
    -------
    logv : ndarray
        Zero (``v = 1``) for rows with nothing left to place or rows that
        must take every remaining column.
    force_ones : ndarray of int
        Rows whose remaining ones cannot be placed after column ``j``.
    dead : ndarray of int
        Forced rows that cannot take a one here either.
    """
    W = np.asarray(getattr(wbar, "wbar", wbar), dtype=float)
    m, n = W.shape
    if n_total is not None and n_total != n:
        raise ValueError("n_total does not match the table")
    r_current = np.asarray(r_current, dtype=np.int64)
    n_after = n - j - 1
    logv = np.zeros(m)
    force, dead = [], []
    for i in range(m):
        k = int(r_current[i])
        if k == 0:
            continue
        if k > n_after:
            if W[i, j] == 0:
                dead.append(i)
            continue
        den = g.get(i, j + 1, k)
        num = g.get(i, j + 1, k - 1)
        if den == NEG_INF:
            force.append(i)
            if W[i, j] == 0 or num == NEG_INF:
                dead.append(i)
            continue
        if W[i, j] == 0:
            logv[i] = NEG_INF
            continue
        logv[i] = np.log(W[i, j]) + num - den + np.log(n_after - k + 1) - np.log(k)
    return logv, np.array(force, dtype=np.int64), np.array(dead, dtype=np.int64)


def v_structural(g: GTable, wbar, a, r_current, j: int):
    """Structural-zero variant of :func:`v_weights`.

    The binomial normalization counts only the positive-weight positions of
    the remaining row.  Zero numerators or denominators give ``v = 1`` and
    leave the decision to the constraint set.
    """
    W = np.asarray(getattr(wbar, "wbar", wbar), dtype=float)
    a = np.asarray(a, dtype=np.int64)
    m, n = W.shape
    r_current = np.asarray(r_current, dtype=np.int64)
    R_after = a[:, j + 1:].sum(axis=1)
    logv = np.zeros(m)
    force = []
    for i in range(m):
        k = int(r_current[i])
        if k == 0:
            continue
        den = g.get(i, j + 1, k)
        num = g.get(i, j + 1, k - 1)
        if den == NEG_INF:
            force.append(i)
            continue
        if W[i, j] == 0 or num == NEG_INF:
            continue
        logv[i] = (np.log(W[i, j]) + np.log(R_after[i] - k + 1) + num
                   - np.log(k) - den)
    return logv, np.array(force, dtype=np.int64)
