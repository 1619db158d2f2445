"""Weight matrices, canonical balancing and column ordering."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class DegenerateWeightsError(ValueError):
    """A row or column of the weight matrix has no positive entry."""


@dataclass(frozen=True)
class WeightMatrix:
    """Nonnegative weights with cached support and logs."""

    w: np.ndarray
    logw: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)

    def __init__(self, w):
        w = np.array(w, dtype=float, copy=True)
        if w.ndim != 2:
            raise ValueError("weight matrix must be 2-D")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        a = (w > 0).astype(np.int64)
        with np.errstate(divide="ignore"):
            logw = np.log(w)
        for arr in (w, logw, a):
            arr.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "logw", logw)
        object.__setattr__(self, "a", a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.w.shape

    @property
    def row_nnz(self) -> np.ndarray:
        return self.a.sum(axis=1)

    @property
    def col_nnz(self) -> np.ndarray:
        return self.a.sum(axis=0)

    @property
    def has_zeros(self) -> bool:
        return bool(np.any(self.a == 0))


@dataclass(frozen=True)
class CanonicalWeights:
    wbar: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    iterations: int
    residual: float

    @property
    def logwbar(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.wbar)


def _as_weights(w) -> WeightMatrix:
    return w if isinstance(w, WeightMatrix) else WeightMatrix(w)


def canonicalize(w, tol: float = 1e-8, max_iter: int = 100_000) -> CanonicalWeights:
    """Rescale rows and columns so nonzero entries average one along every line.

    Alternates row and column normalization.  The starting point is a
    log-domain centering over the support, which makes the iterates exactly
    equivariant under diagonal rescaling whenever ``w`` has full support.
    Iteration stops once the L1 row-balance error drops below ``tol``.

    Parameters
    ----------
    w : array_like or WeightMatrix
        Nonnegative ``m x n`` weights.
    tol : float
        Target L1 balance error.
    max_iter : int
        Iteration cap; hitting it only emits a warning since every iterate
        defines the same target distribution.

    Returns
    -------
    CanonicalWeights
    """
    wm = _as_weights(w)
    W = wm.w
    a_mask = wm.a.astype(bool)
    N = wm.row_nnz.astype(float)
    M = wm.col_nnz.astype(float)
    if np.any(N == 0) or np.any(M == 0):
        raise DegenerateWeightsError("degenerate weight matrix")

    logw = np.where(a_mask, wm.logw, 0.0)
    x = -logw.sum(axis=1) / N
    y = -np.where(a_mask, logw + x[:, None], 0.0).sum(axis=0) / M
    b = np.exp(y)

    def row_residual(alpha, Wb):
        return float(np.sum(np.abs(alpha * Wb - N)))

    alpha = N / (W @ b)
    alpha /= alpha.mean()
    beta = M / (alpha @ W)
    k = 0
    Wb = W @ beta
    residual = row_residual(alpha, Wb)
    while residual > tol and k < max_iter:
        k += 1
        alpha = N / Wb
        alpha /= alpha.mean()
        beta = M / (alpha @ W)
        Wb = W @ beta
        residual = row_residual(alpha, Wb)
    if residual > tol:
        warnings.warn(
            f"canonicalize stopped after {k} iterations with residual {residual:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    wbar = alpha[:, None] * W * beta[None, :]
    return CanonicalWeights(wbar=wbar, alpha=alpha, beta=beta, iterations=k,
                            residual=residual)


def detect_banded(w) -> bool:
    """True when each row's support is one contiguous block and the block
    edges are nondecreasing down the rows.  Empty rows are skipped."""
    if isinstance(w, CanonicalWeights):
        w = w.wbar
    elif isinstance(w, WeightMatrix):
        w = w.w
    a = np.asarray(w) > 0
    prev_lo, prev_hi = -1, -1
    for row in a:
        idx = np.flatnonzero(row)
        if idx.size == 0:
            continue
        lo, hi = int(idx[0]), int(idx[-1])
        if hi - lo + 1 != idx.size:
            return False
        if lo < prev_lo or hi < prev_hi:
            return False
        prev_lo, prev_hi = lo, hi
    return True


def column_order(wbar, c, mode: str = "auto") -> np.ndarray:
    """Column permutation used before sampling.

    ``mode="descend"`` sorts by decreasing column sum, then by decreasing
    variance of the balanced weights in the column, then by index.
    ``mode="auto"`` keeps the original order only for banded weights that
    actually contain zeros; otherwise it behaves like ``descend``.
    ``wbar`` may be None for uniform weights.
    """
    c = np.asarray(c, dtype=np.int64)
    n = len(c)
    if mode == "none":
        return np.arange(n, dtype=np.int64)
    if mode not in ("auto", "descend"):
        raise ValueError(f"unknown column order mode {mode!r}")
    W = None
    if wbar is not None:
        W = wbar.wbar if isinstance(wbar, CanonicalWeights) else np.asarray(wbar, float)
    if mode == "auto" and W is not None and np.any(W == 0) and detect_banded(W > 0):
        return np.arange(n, dtype=np.int64)
    if W is None or W.shape[0] < 2:
        var = np.zeros(n)
    else:
        var = W.var(axis=0, ddof=1)
    return np.lexsort((np.arange(n), -var, -c)).astype(np.int64)
