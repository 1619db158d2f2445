"""Importance-weight estimators, diagnostics and alpha-permanents.

Weights span hundreds of orders of magnitude, so all statistics are kept as
``(shift, mean, M2)`` triples over ``exp(log_value - shift)`` and merged with
the pairwise (Chan) update after aligning shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .margins import Margins
from .proposal import ProblemSpec, SampleRecord, sample_batch, _prepared


@dataclass(frozen=True)
class LogBigNumber:
    """Positive number stored by its natural log."""

    log_value: float

    @classmethod
    def from_log10(cls, x: float) -> "LogBigNumber":
        return cls(x * math.log(10))

    @property
    def log10(self) -> float:
        return self.log_value / math.log(10)

    @property
    def is_zero(self) -> bool:
        return self.log_value == -math.inf

    def parts(self, digits: int = 6) -> tuple[float, int]:
        """``(mantissa, exp10)`` with mantissa in ``[1, 10)`` rounded to ``digits``."""
        if self.is_zero:
            return 0.0, 0
        if not math.isfinite(self.log_value):
            raise ValueError("value is not finite")
        e = math.floor(self.log10)
        mant = round(10 ** (self.log10 - e), digits - 1)
        if mant >= 10:
            mant = round(mant / 10, digits - 1)
            e += 1
        return mant, e

    def to_dict(self, digits: int = 6) -> dict:
        mant, e = self.parts(digits)
        return {"mantissa": mant, "exp10": e}

    def __str__(self) -> str:
        mant, e = self.parts()
        return f"{mant:.5f}e{e:+d}"


@dataclass
class _Moments:
    """Running mean/M2 of ``sign * exp(log_x - shift)``."""

    n: int = 0
    shift: float = -math.inf
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_logs(cls, log_x: np.ndarray, sign: np.ndarray | None = None) -> "_Moments":
        log_x = np.asarray(log_x, dtype=float)
        n = len(log_x)
        if n == 0:
            return cls()
        shift = float(np.max(log_x))
        if shift == -math.inf:
            return cls(n=n, shift=-math.inf, mean=0.0, m2=0.0)
        x = np.exp(log_x - shift)
        if sign is not None:
            x = x * sign
        mean = float(np.mean(x))
        m2 = float(np.sum((x - mean) ** 2))
        return cls(n=n, shift=shift, mean=mean, m2=m2)

    def rescaled(self, shift: float) -> tuple[float, float]:
        if self.shift == -math.inf:
            return 0.0, 0.0
        a = math.exp(self.shift - shift)
        return self.mean * a, self.m2 * a * a

    def merge(self, other: "_Moments") -> "_Moments":
        if other.n == 0:
            return _Moments(self.n, self.shift, self.mean, self.m2)
        if self.n == 0:
            return _Moments(other.n, other.shift, other.mean, other.m2)
        shift = max(self.shift, other.shift)
        if shift == -math.inf:
            return _Moments(self.n + other.n, shift, 0.0, 0.0)
        ma, m2a = self.rescaled(shift)
        mb, m2b = other.rescaled(shift)
        n = self.n + other.n
        delta = mb - ma
        mean = ma + delta * other.n / n
        m2 = m2a + m2b + delta * delta * self.n * other.n / n
        return _Moments(n, shift, mean, m2)

    @property
    def log_mean(self) -> float:
        if self.mean <= 0 or self.shift == -math.inf:
            return -math.inf
        return math.log(self.mean) + self.shift

    @property
    def log_sd(self) -> float:
        if self.n < 2 or self.m2 <= 0 or self.shift == -math.inf:
            return -math.inf
        return 0.5 * math.log(self.m2 / (self.n - 1)) + self.shift


@dataclass(frozen=True)
class EstimateSummary:
    """Estimates from ``T`` importance weights.

    ``kappa_hat`` estimates the normalizing constant.  When a statistic
    ``h`` was supplied, ``mu_hat`` is the self-normalized mean of ``h`` and
    ``product_hat`` the unbiased estimate of ``kappa * mu``.  ``rel_se_pct``
    refers to ``product_hat`` (to ``kappa_hat`` when no ``h`` was given).
    """

    T: int
    kappa_hat: LogBigNumber
    se_kappa: LogBigNumber
    cv2_hat: float
    delta_hat: float
    ess: float
    dead_fraction: float
    delta_excludes_dead: bool
    mu_hat: float | None = None
    product_hat: LogBigNumber | None = None
    se_product: LogBigNumber | None = None
    rel_se_pct: float = math.nan

    def to_dict(self) -> dict:
        out = {
            "T": self.T,
            "kappa_hat": self.kappa_hat.to_dict(),
            "se": self.se_kappa.to_dict(),
            "cv2_hat": self.cv2_hat,
            "delta_hat": self.delta_hat,
            "ess": self.ess,
            "dead_fraction": self.dead_fraction,
            "delta_excludes_dead": self.delta_excludes_dead,
            "rel_se_pct": self.rel_se_pct,
        }
        if self.mu_hat is not None:
            out["mu_hat"] = self.mu_hat
            out["product_hat"] = self.product_hat.to_dict()
            out["se_product"] = self.se_product.to_dict()
        return out


@dataclass
class Accumulator:
    """Mergeable sufficient statistics for :class:`EstimateSummary`."""

    f: _Moments = field(default_factory=_Moments)
    g: _Moments | None = None
    log_max: float = -math.inf
    log_min: float = math.inf
    dead: int = 0

    @classmethod
    def from_samples(cls, log_f, h=None, log_h=None) -> "Accumulator":
        log_f = np.asarray(log_f, dtype=float)
        alive = log_f > -np.inf
        acc = cls(f=_Moments.from_logs(log_f), dead=int(np.sum(~alive)))
        if np.any(alive):
            acc.log_max = float(np.max(log_f[alive]))
            acc.log_min = float(np.min(log_f[alive]))
        if h is not None or log_h is not None:
            if log_h is None:
                h = np.asarray(h, dtype=float)
                with np.errstate(divide="ignore"):
                    log_h = np.log(np.abs(h))
                sign = np.sign(h)
            else:
                log_h = np.asarray(log_h, dtype=float)
                sign = None
            lg = np.where(alive, log_f + log_h, -np.inf)
            acc.g = _Moments.from_logs(lg, sign)
        return acc

    def merge(self, other: "Accumulator") -> "Accumulator":
        if (self.g is None) != (other.g is None) and self.f.n and other.f.n:
            raise ValueError("cannot merge summaries with and without h")
        g = None
        if self.g is not None or other.g is not None:
            g = (self.g or _Moments()).merge(other.g or _Moments())
        return Accumulator(
            f=self.f.merge(other.f),
            g=g,
            log_max=max(self.log_max, other.log_max),
            log_min=min(self.log_min, other.log_min),
            dead=self.dead + other.dead,
        )

    def summary(self) -> EstimateSummary:
        T = self.f.n
        if T < 1:
            raise ValueError("need at least one sample")
        log_kappa = self.f.log_mean
        kappa = LogBigNumber(log_kappa)
        if T >= 2 and log_kappa > -math.inf:
            cv2 = self.f.m2 / ((T - 1) * self.f.mean**2)
        else:
            cv2 = math.nan
        se = LogBigNumber(self.f.log_sd - 0.5 * math.log(T)) if T >= 2 else \
            LogBigNumber(math.nan)
        if self.log_min < math.inf:
            gap = self.log_max - self.log_min
            delta = math.expm1(gap) if gap < 709 else math.inf
        else:
            delta = math.nan
        ess = T / (1 + cv2) if not math.isnan(cv2) else math.nan
        out = dict(
            T=T, kappa_hat=kappa, se_kappa=se, cv2_hat=cv2, delta_hat=delta,
            ess=ess, dead_fraction=self.dead / T, delta_excludes_dead=self.dead > 0,
        )
        target = self.f
        if self.g is not None:
            target = self.g
            if self.f.mean > 0:
                mu = self.g.mean / self.f.mean * math.exp(self.g.shift - self.f.shift) \
                    if self.g.shift > -math.inf else 0.0
            else:
                mu = math.nan
            out["mu_hat"] = mu
            out["product_hat"] = LogBigNumber(self.g.log_mean)
            out["se_product"] = LogBigNumber(self.g.log_sd - 0.5 * math.log(T)) \
                if T >= 2 else LogBigNumber(math.nan)
        if T >= 2 and target.mean != 0:
            out["rel_se_pct"] = 100 * math.sqrt(target.m2 / (T - 1) / T) / abs(target.mean)
        return EstimateSummary(**out)


def estimate(log_f, h=None, log_h=None) -> EstimateSummary:
    """Summaries from log importance weights (``-inf`` for dead samples).

    Parameters
    ----------
    log_f : array_like
        ``log f`` per sample.
    h, log_h : array_like, optional
        Statistic of interest, either directly or by its log (nonnegative
        statistics only).
    """
    return Accumulator.from_samples(log_f, h=h, log_h=log_h).summary()


def log_importance_weight(record: SampleRecord, w=None) -> float:
    """``sum z log w - log Q*(z)`` using the original weights; ``-inf`` if dead."""
    if not record.alive:
        return -math.inf
    if w is None:
        return record.log_p - record.log_q
    w = np.asarray(getattr(w, "w", w), dtype=float)
    z = record.z != 0
    if np.any(w[z] == 0):
        return -math.inf
    return float(np.sum(np.log(w[z]))) - record.log_q


@numba.njit(cache=True)
def _cycles_of(perm):
    n = perm.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    cyc = 0
    for s in range(n):
        if seen[s]:
            continue
        cyc += 1
        k = s
        while not seen[k]:
            seen[k] = True
            k = perm[k]
    return cyc


def cycle_count(z) -> int:
    """Number of cycles of the permutation ``j -> i`` with ``z[i, j] = 1``."""
    z = np.asarray(z)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise ValueError("expected a square matrix")
    if np.any((z != 0) & (z != 1)) or np.any(z.sum(axis=0) != 1) \
            or np.any(z.sum(axis=1) != 1):
        raise ValueError("not a permutation matrix")
    perm = np.argmax(z != 0, axis=0).astype(np.int64)
    return int(_cycles_of(perm))


@dataclass(frozen=True)
class AlphaPermanentRequest:
    w: np.ndarray
    alpha: float
    T: int


def alpha_permanent(req: AlphaPermanentRequest, seed: int = 0, threads: int | None = None,
                    **options) -> EstimateSummary:
    """Estimate ``sum_perm alpha^cycles * prod w`` by sampling permutation matrices.

    ``options`` are forwarded to :class:`ProblemSpec` (``approx``,
    ``column_order`` ...).  Only ``alpha > 0`` is supported.
    """
    w = np.asarray(req.w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("alpha-permanent needs a square weight matrix")
    if not req.alpha > 0:
        raise ValueError("alpha must be positive")
    if req.T < 1:
        raise ValueError("T must be positive")
    n = w.shape[0]
    spec = ProblemSpec(Margins([1] * n, [1] * n), weights=w, **options)
    prep = _prepared(spec)
    batch = sample_batch(prep, req.T, seed, keep=True, threads=threads)
    cyc = np.zeros(req.T)
    perm = np.empty(n, dtype=np.int64)
    for t in range(req.T):
        if not batch.alive[t]:
            continue
        perm[prep.col_perm[batch.cols[t]]] = batch.rows[t]
        cyc[t] = _cycles_of(perm)
    log_h = cyc * math.log(req.alpha)
    return estimate(batch.log_f, log_h=log_h)
