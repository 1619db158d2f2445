"""Column-by-column proposal: single-column dynamic program and whole-matrix
sampling and evaluation.

Two routes are provided.  The compiled route (:func:`sample_matrix`,
:func:`sample_batch`, :func:`evaluate_matrix`) is what callers use.  The
reference route (:func:`sample_matrix_reference`,
:func:`evaluate_matrix_reference`) rebuilds every column from the margins,
combinatorics and rowpoly modules in log space and is kept for
cross-checking and for the structural-zero variant.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numba.typed import List as NumbaList

from . import _kernel
from .combinatorics import log_u_canfield, log_u_greenhill, log_u_structural
from .margins import (
    ConstraintSet,
    InfeasibleMarginsError,
    Margins,
    build_constraints,
    build_constraints_structural,
    conjugate,
    gale_ryser_feasible,
    sort_rows,
)
from .rowpoly import GTable, precompute_g, v_structural, v_weights
from .weights import CanonicalWeights, WeightMatrix, canonicalize, column_order

APPROX = {"canfield": _kernel.APPROX_CANFIELD, "greenhill": _kernel.APPROX_GREENHILL}


# ---------------------------------------------------------------------------
# single column
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnChain:
    """Markov chain over partial sums ``S_0 = 0, S_1, ..., S_m = c1``.

    ``log_p1[k, s]`` / ``log_p0[k, s]`` are the log probabilities that
    position ``k`` (row ``pi[k]``) takes 1 / 0 given ``S_k = s``.  Only the
    ``2 * c1 + 1`` style band ``lo[k] <= s <= hi[k]`` is meaningful.
    """

    pi: np.ndarray
    c1: int
    lo: np.ndarray  # bounds on S_k, k = 0..m
    hi: np.ndarray
    log_p1: np.ndarray
    log_p0: np.ndarray
    log_norm: float

    @property
    def dead(self) -> bool:
        return self.log_norm == -np.inf

    @property
    def m(self) -> int:
        return len(self.pi)


def dp_build(u, v, constraints: ConstraintSet, c1: int | None = None) -> ColumnChain:
    """Backward messages for ``Q(x) ∝ prod (u_i v_i)^x_i`` on the constraint set.

    ``u`` and ``v`` are log-domain vectors indexed by original row.  Runs in
    ``O(m * c1)``.
    """
    u = np.asarray(u, dtype=float)
    v = np.zeros_like(u) if v is None else np.asarray(v, dtype=float)
    lam = u + v
    pi = constraints.pi
    m = len(pi)
    if c1 is None:
        c1 = constraints.c1
    lo = np.zeros(m + 1, dtype=np.int64)
    hi = np.zeros(m + 1, dtype=np.int64)
    for k in range(1, m + 1):
        lo[k] = max(int(constraints.lo[k - 1]), 0)
        hi[k] = min(int(constraints.hi[k - 1]), k, c1)
    lo[m] = max(lo[m], c1)
    hi[m] = min(hi[m], c1)

    beta = np.full(c1 + 2, -np.inf)
    if lo[m] <= hi[m]:
        beta[c1] = 0.0
    log_p1 = np.full((m, c1 + 1), -np.inf)
    log_p0 = np.full((m, c1 + 1), -np.inf)
    for k in range(m - 1, -1, -1):
        allowed = constraints.A[k]
        lam_k = lam[pi[k]]
        new = np.full(c1 + 2, -np.inf)
        for s in range(lo[k], min(hi[k], c1) + 1):
            t0 = beta[s] if 0 in allowed else -np.inf
            t1 = lam_k + beta[s + 1] if (1 in allowed and lam_k > -np.inf) else -np.inf
            tot = np.logaddexp(t0, t1)
            new[s] = tot
            if tot > -np.inf:
                log_p0[k, s] = t0 - tot
                log_p1[k, s] = t1 - tot
        beta = new
    return ColumnChain(pi=pi, c1=c1, lo=lo, hi=hi, log_p1=log_p1, log_p0=log_p0,
                       log_norm=float(beta[0]))


def dp_sample(chain: ColumnChain, rng: np.random.Generator):
    """Draw a column; returns ``(x, log_q)`` with ``x`` indexed by original row."""
    if chain.dead:
        raise ValueError("cannot sample from a dead chain")
    x = np.zeros(chain.m, dtype=np.int8)
    s = 0
    log_q = 0.0
    for k in range(chain.m):
        lp1 = chain.log_p1[k, s]
        if rng.random() < np.exp(lp1):
            x[chain.pi[k]] = 1
            log_q += lp1
            s += 1
        else:
            log_q += chain.log_p0[k, s]
    return x, log_q


def dp_evaluate(chain: ColumnChain, x) -> float:
    """``log Q(x)``; ``-inf`` outside the support."""
    if chain.dead:
        return -np.inf
    s = 0
    log_q = 0.0
    for k in range(chain.m):
        if s > chain.c1 or s < chain.lo[k] or s > chain.hi[k]:
            return -np.inf
        xi = int(x[chain.pi[k]])
        if xi not in (0, 1):
            return -np.inf
        log_q += chain.log_p1[k, s] if xi else chain.log_p0[k, s]
        s += xi
    if s != chain.c1 or log_q == -np.inf:
        return -np.inf
    return float(log_q)


# ---------------------------------------------------------------------------
# problem setup
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemSpec:
    """Margins, optional weights and sampler options.

    ``weights=None`` means the uniform case.  ``canonical=False`` feeds the
    raw weights to the ``v`` factors instead of the balanced ones.
    ``zeros="structural"`` switches the reference route to the exact-support
    constraints for patterns with at most one zero per row and column.
    """

    margins: Margins
    weights: WeightMatrix | None = None
    approx: str = "canfield"
    column_order: str = "auto"
    canonical: bool = True
    zeros: str = "general"
    tol: float = 1e-8
    max_iter: int = 100_000

    def __post_init__(self):
        if self.weights is not None and not isinstance(self.weights, WeightMatrix):
            object.__setattr__(self, "weights", WeightMatrix(self.weights))
        if self.approx not in APPROX:
            raise ValueError(f"unknown approximation {self.approx!r}")
        if self.zeros not in ("general", "structural"):
            raise ValueError(f"unknown zeros mode {self.zeros!r}")
        if self.weights is not None and self.weights.shape != (self.margins.m,
                                                               self.margins.n):
            raise ValueError("weight matrix shape does not match the margins")

    @cached_property
    def prepared(self) -> "PreparedSpec":
        return PreparedSpec.build(self)


@dataclass(frozen=True)
class PreparedSpec:
    """Everything shared by all samples of one problem (immutable)."""

    spec: ProblemSpec
    col_perm: np.ndarray
    c: np.ndarray
    r: np.ndarray
    rndx0: np.ndarray
    cconj0: np.ndarray
    use_w: bool
    use_v: bool
    canonical: CanonicalWeights | None
    wbar: np.ndarray = field(repr=False)
    logwbar: np.ndarray = field(repr=False)
    logw: np.ndarray = field(repr=False)
    g: GTable | None = field(repr=False)

    @classmethod
    def build(cls, spec: ProblemSpec) -> "PreparedSpec":
        mg = spec.margins
        if not gale_ryser_feasible(mg):
            raise InfeasibleMarginsError("Gale-Ryser infeasible: empty support")
        r = np.asarray(mg.r, dtype=np.int64)
        wm = spec.weights
        canon = None
        if wm is not None:
            if spec.canonical:
                canon = canonicalize(wm, tol=spec.tol, max_iter=spec.max_iter)
                W = canon.wbar
            else:
                W = wm.w
        mode = "descend" if spec.zeros == "structural" else spec.column_order
        perm = column_order(W if wm is not None else None, mg.c, mode)
        c = np.asarray(mg.c, dtype=np.int64)[perm]
        dummy = np.zeros((1, 1))
        use_w = wm is not None
        use_v = use_w and not np.all(W == 1.0)
        if use_v:
            wbar = np.ascontiguousarray(W[:, perm])
            with np.errstate(divide="ignore"):
                logwbar = np.log(wbar)
            g = precompute_g(wbar, r)
        else:
            wbar, logwbar, g = dummy, dummy, None
        logw = np.ascontiguousarray(wm.logw[:, perm]) if use_w else dummy
        return cls(spec=spec, col_perm=perm, c=c, r=r, rndx0=sort_rows(r),
                   cconj0=conjugate(c, mg.m), use_w=use_w, use_v=use_v,
                   canonical=canon, wbar=wbar, logwbar=logwbar, logw=logw, g=g)

    def kernel_args(self):
        gvals = self.g.values if self.g is not None else np.zeros((1, 1))
        goffs = self.g.offsets if self.g is not None else np.zeros(1, dtype=np.int64)
        return (self.r, self.c, self.rndx0, self.cconj0, APPROX[self.spec.approx],
                self.use_w, self.logw, self.use_v, self.wbar, self.logwbar,
                gvals, goffs)


def _prepared(spec) -> PreparedSpec:
    return spec if isinstance(spec, PreparedSpec) else spec.prepared


# ---------------------------------------------------------------------------
# records and RNG streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleRecord:
    """One draw.  ``z`` is in original row and column order.

    For dead draws ``z`` is the partial matrix and ``log_q`` the log
    probability of the partial path; the importance weight is zero.
    """

    z: np.ndarray
    log_q: float
    log_p: float
    alive: bool

    @property
    def log_f(self) -> float:
        return self.log_p - self.log_q if self.alive else -np.inf


def sample_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sample ``index`` under master ``seed``."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,)))
    )


def _to_matrix(prep: PreparedSpec, rows, cols) -> np.ndarray:
    m, n = len(prep.r), len(prep.c)
    z = np.zeros((m, n), dtype=np.int8)
    ok = rows >= 0
    z[rows[ok], prep.col_perm[cols[ok]]] = 1
    return z


# ---------------------------------------------------------------------------
# compiled route
# ---------------------------------------------------------------------------


def sample_matrix(spec, rng: np.random.Generator) -> SampleRecord:
    """Draw one matrix from the proposal using the stream ``rng``."""
    prep = _prepared(spec)
    gens = NumbaList([rng])
    d = int(prep.r.sum())
    alive = np.zeros(1, dtype=np.bool_)
    lq = np.zeros(1)
    lp = np.zeros(1)
    rows = np.full((1, d), -1, dtype=np.int64)
    cols = np.full((1, d), -1, dtype=np.int64)
    _kernel.sample_many(gens, *prep.kernel_args(), True, alive, lq, lp, rows, cols)
    return SampleRecord(z=_to_matrix(prep, rows[0], cols[0]), log_q=float(lq[0]),
                        log_p=float(lp[0]), alive=bool(alive[0]))


@dataclass(frozen=True)
class SampleBatch:
    """Results for samples ``start .. start + T - 1`` in index order."""

    alive: np.ndarray
    log_q: np.ndarray
    log_p: np.ndarray
    rows: np.ndarray | None = None
    cols: np.ndarray | None = None

    @property
    def log_f(self) -> np.ndarray:
        return np.where(self.alive, self.log_p - self.log_q, -np.inf)

    def __len__(self) -> int:
        return len(self.alive)


def default_threads() -> int:
    env = os.environ.get("BINARY_MARGINS_THREADS")
    if env:
        return max(1, int(env))
    return 1


def sample_batch(spec, T: int, seed: int, start: int = 0, keep: bool = False,
                 threads: int | None = None, block: int = 512) -> SampleBatch:
    """Draw ``T`` samples; sample ``t`` uses ``sample_stream(seed, start + t)``.

    The output does not depend on ``threads``.
    """
    prep = _prepared(spec)
    if T < 0:
        raise ValueError("T must be nonnegative")
    threads = default_threads() if threads is None else max(1, int(threads))
    d = int(prep.r.sum())
    alive = np.zeros(T, dtype=np.bool_)
    lq = np.zeros(T)
    lp = np.zeros(T)
    shape = (T, d) if keep else (0, 0)
    rows = np.full(shape, -1, dtype=np.int64)
    cols = np.full(shape, -1, dtype=np.int64)
    args = prep.kernel_args()

    def run(lo: int, hi: int):
        gens = NumbaList([sample_stream(seed, start + t) for t in range(lo, hi)])
        sl = slice(lo, hi)
        _kernel.sample_many(gens, *args, keep, alive[sl], lq[sl], lp[sl],
                            rows[sl] if keep else rows, cols[sl] if keep else cols)

    bounds = [(b, min(b + block, T)) for b in range(0, T, block)]
    if threads == 1 or len(bounds) <= 1:
        for lo, hi in bounds:
            run(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: run(*b), bounds))
    return SampleBatch(alive=alive, log_q=lq, log_p=lp,
                       rows=rows if keep else None, cols=cols if keep else None)


def batch_matrices(spec, batch: SampleBatch):
    """Matrices of a batch drawn with ``keep=True``, in original order."""
    prep = _prepared(spec)
    if batch.rows is None:
        raise ValueError("batch was drawn without keep=True")
    return [_to_matrix(prep, batch.rows[t], batch.cols[t]) for t in range(len(batch))]


_EVAL_RNG = np.random.default_rng(0)


def evaluate_matrix(spec, z) -> float:
    """``log Q*(z)`` under the same schedule as :func:`sample_matrix`."""
    prep = _prepared(spec)
    z = np.asarray(z)
    m, n = len(prep.r), len(prep.c)
    if z.shape != (m, n):
        raise ValueError(f"matrix shape {z.shape} does not match ({m}, {n})")
    if np.any((z != 0) & (z != 1)):
        return -np.inf
    zz = np.ascontiguousarray(z[:, prep.col_perm] != 0)
    alive, lq, _, _ = _kernel.evaluate_one(_EVAL_RNG, zz, *prep.kernel_args())
    return float(lq) if alive else -np.inf


def log_weight_of(spec, z) -> float:
    """``sum z * log w`` with the original weights (0 in the uniform case)."""
    prep = _prepared(spec)
    wm = prep.spec.weights
    if wm is None:
        return 0.0
    z = np.asarray(z) != 0
    if np.any(wm.a[z] == 0):
        return -np.inf
    return float(np.sum(wm.logw[z]))


# ---------------------------------------------------------------------------
# reference route
# ---------------------------------------------------------------------------


def _column_chain(prep: PreparedSpec, r_cur: np.ndarray, j: int):
    """Chain for sampling-order column ``j`` given current row sums."""
    spec = prep.spec
    c = prep.c
    n = len(c)
    cur = Margins(r_cur, c[j:])
    structural = spec.zeros == "structural" and prep.spec.weights is not None
    if structural:
        W = prep.wbar if prep.use_v else np.ones((len(r_cur), n))
        a_full = (W > 0).astype(np.int64)
        cs = build_constraints_structural(cur, a_full[:, j:])
        u = log_u_structural(r_cur, c[j + 1:], a_full[:, j:])
        if prep.g is not None:
            v, _ = v_structural(prep.g, W, a_full, r_cur, j)
        else:
            v = np.zeros(len(r_cur))
        return dp_build(u, v, cs, int(c[j]))
    cs = build_constraints(cur)
    if spec.approx == "canfield":
        u = log_u_canfield(r_cur, c[j + 1:], n - j)
    else:
        u = log_u_greenhill(r_cur, c[j + 1:], n - j)
    v = np.zeros(len(r_cur))
    if prep.use_v:
        v, force, dead = v_weights(prep.g, prep.wbar, r_cur, j)
        if len(dead):
            return None
        if len(force):
            cs = cs.with_forced(ones=force)
    return dp_build(u, v, cs, int(c[j]))


def _reference(prep: PreparedSpec, rng, z):
    m, n = len(prep.r), len(prep.c)
    r_cur = prep.r.copy()
    out = np.zeros((m, n), dtype=np.int8)
    log_q = 0.0
    zs = None if z is None else np.asarray(z)[:, prep.col_perm]
    for j in range(n):
        if prep.c[j] == 0:
            if zs is not None and np.any(zs[:, j]):
                return out, -np.inf, False
            continue
        chain = _column_chain(prep, r_cur, j)
        if chain is None or chain.dead:
            return out, (-np.inf if zs is not None else log_q), False
        if zs is None:
            x, lq = dp_sample(chain, rng)
        else:
            x = zs[:, j].astype(np.int8)
            lq = dp_evaluate(chain, x)
            if lq == -np.inf:
                return out, -np.inf, False
        log_q += lq
        out[:, prep.col_perm[j]] = x
        r_cur = r_cur - x
    return out, log_q, True


def sample_matrix_reference(spec, rng: np.random.Generator) -> SampleRecord:
    prep = _prepared(spec)
    z, log_q, alive = _reference(prep, rng, None)
    log_p = log_weight_of(prep, z)
    if log_p == -np.inf:
        alive = False
    return SampleRecord(z=z, log_q=log_q, log_p=log_p, alive=alive)


def evaluate_matrix_reference(spec, z) -> float:
    prep = _prepared(spec)
    z = np.asarray(z)
    if z.shape != (len(prep.r), len(prep.c)):
        raise ValueError("matrix shape does not match the margins")
    _, log_q, alive = _reference(prep, None, z)
    return log_q if alive else -np.inf
