"""Acceptance criteria 1-10, one test each, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the report; add
``--runslow`` for the full-scale checks.
"""

import math
import time

import numpy as np
import pytest

from binary_margins import (
    AlphaPermanentRequest,
    Margins,
    ProblemSpec,
    alpha_permanent,
    estimate,
    evaluate_matrix,
    sample_batch,
)
from binary_margins import oracle
from binary_margins.combinatorics import log_n_canfield
from binary_margins.proposal import log_weight_of

from conftest import small_margins


def report(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def kappa(s):
    return s.kappa_hat.log_value, s.se_kappa.log_value


def within_se(log_est, log_se, log_true, k=4.0):
    """``|est - true| <= k * se`` evaluated relative to the true value."""
    err = abs(math.expm1(log_est - log_true))
    return err <= k * math.exp(log_se - log_true), err / math.exp(log_se - log_true)


def test_criterion_1_finch_exact():
    t0 = time.perf_counter()
    val = oracle.finch_count().value
    dt = time.perf_counter() - t0
    report(1, val == 67_149_106_137_567_626 and dt < 10,
           f"count={val} time={dt:.2f}s")


def test_criterion_2_finch_estimate():
    t0 = time.perf_counter()
    spec = ProblemSpec(Margins(oracle.FINCH_R, oracle.FINCH_C))
    s = estimate(sample_batch(spec, 100_000, seed=2024).log_f)
    dt = time.perf_counter() - t0
    ok, z = within_se(*kappa(s), oracle.finch_count().log)
    report(2, ok and 0.2 <= s.cv2_hat <= 1.0 and dt < 120,
           f"kappa_hat={s.kappa_hat} |err|/se={z:.2f} cv2={s.cv2_hat:.3f} time={dt:.1f}s")


def test_criterion_3_one_regular():
    lines, ok = [], True
    for n in (5, 50):
        s = estimate(sample_batch(ProblemSpec(Margins([1] * n, [1] * n)), 1000, seed=3).log_f)
        gap = abs(s.kappa_hat.log_value - math.lgamma(n + 1))
        ok &= s.delta_hat <= 1e-10 and abs(s.cv2_hat) <= 1e-10 and gap <= 1e-9
        lines.append(f"n={n} delta={s.delta_hat:.1e} cv2={s.cv2_hat:.1e} |log gap|={gap:.1e}")
    report(3, ok, "; ".join(lines))


def test_criterion_4_two_regular():
    t0 = time.perf_counter()
    ok = len(oracle.enumerate_omega(Margins([2] * 4, [2] * 4))) == 90 == \
        oracle.two_regular_count(4).value
    lines = ["H4 enumeration=90" if ok else "H4 enumeration mismatch"]
    for n in (4, 5, 6, 30):
        s = estimate(sample_batch(ProblemSpec(Margins([2] * n, [2] * n)), 10_000,
                                  seed=40 + n).log_f)
        good, z = within_se(*kappa(s), oracle.two_regular_count(n).log)
        if n == 30:
            good &= s.cv2_hat < 1e-3
        ok &= good
        lines.append(f"n={n} |err|/se={z:.2f} cv2={s.cv2_hat:.2e}")
    dt = time.perf_counter() - t0
    report(4, ok and dt < 60, "; ".join(lines) + f"; time={dt:.1f}s")


def _identity_grid():
    """Margins up to 3 x 3 exhaustively plus a sample of larger shapes, each
    paired with the four weight classes on the 4 x 4 MINSTD matrix."""
    y = oracle.minstd_canonical(4, 4)
    grid = small_margins(3, 3)
    larger = [mg for mg in small_margins(4, 4, limit=400) if max(mg.m, mg.n) == 4]
    for mg in grid + larger:
        for cls in ("I", "II", "III", "IV"):
            yield mg, oracle.weight_class(y[:mg.m, :mg.n], cls)


def _class_iv_windows(count):
    """4 x 4 windows of a larger MINSTD matrix whose class-IV weights have zeros."""
    y = oracle.minstd_canonical(40, 40)
    out = []
    for i in range(0, 37):
        for j in range(0, 37):
            w = oracle.weight_class(y[i:i + 4, j:j + 4], "IV")
            if np.any(w == 0) and np.all(w.sum(axis=0) > 0) and np.all(w.sum(axis=1) > 0):
                out.append(w)
            if len(out) == count:
                return out
    return out


def _zero_grid(windows=25, per_window=40):
    margins = [mg for mg in small_margins(4, 4, limit=600) if (mg.m, mg.n) == (4, 4)]
    for k, w in enumerate(_class_iv_windows(windows)):
        for mg in margins[k::len(margins) // per_window or 1][:per_window]:
            yield mg, w


def test_criterion_5_unbiasedness_identity():
    worst, count = 0.0, 0
    for mg, w in list(_identity_grid()) + list(_zero_grid()):
        spec = ProblemSpec(mg, weights=w)
        terms = []
        for z in oracle.enumerate_omega(mg):
            lq = evaluate_matrix(spec, z)
            lp = log_weight_of(spec, z)
            if lq == -np.inf or lp == -np.inf:
                continue
            # Q*(z) f(z), with f as the sampler reports it
            terms.append(math.exp(lq) * math.exp(lp - lq))
        exact = float(oracle.exact_kappa(mg, w).value)
        if exact == 0:
            assert not terms
            continue
        worst = max(worst, abs(math.fsum(terms) / exact - 1))
        count += 1
    report(5, count >= 50 and worst <= 1e-9, f"specs={count} worst rel err={worst:.2e}")


def test_criterion_6_support():
    mismatch, checked = 0, 0
    for mg, w in _identity_grid():
        if np.any(w == 0):
            continue
        spec = ProblemSpec(mg, weights=w)
        omega = oracle.enumerate_omega(mg)
        logs = [evaluate_matrix(spec, z) for z in omega]
        # positive on all of Omega and no mass anywhere else
        full = all(v > -np.inf for v in logs) and \
            math.isclose(math.fsum(math.exp(v) for v in logs), 1.0, rel_tol=1e-12)
        mismatch += not full
        checked += 1
    uncovered, zero_specs = 0, 0
    for mg, w in _zero_grid():
        spec = ProblemSpec(mg, weights=w)
        support = oracle.enumerate_omega(mg, zero_pattern=(w > 0))
        if not support:
            continue
        zero_specs += 1
        uncovered += sum(evaluate_matrix(spec, z) == -np.inf for z in support)
    report(6, mismatch == 0 and uncovered == 0 and zero_specs > 50,
           f"positive specs={checked} mismatches={mismatch}; "
           f"class-IV specs={zero_specs} uncovered={uncovered}")


def test_criterion_7_constant_alpha_permanent():
    t0 = time.perf_counter()
    ok, lines = True, []
    for alpha in (0.5, 1.0, 2.0):
        s = alpha_permanent(AlphaPermanentRequest(np.ones((20, 20)), alpha, 10_000), seed=7)
        exact = oracle.const_alpha_permanent(20, 1, alpha).log
        err = abs(math.expm1(s.product_hat.log_value - exact))
        se = math.exp(s.se_product.log_value - exact)
        # alpha = 1 gives identical weights, so se is pure rounding noise
        good = err <= 4 * se + 1e-9
        ok &= good
        lines.append(f"n=20 alpha={alpha} |err|/exact={err:.2e} se/exact={se:.2e}")
    s = alpha_permanent(AlphaPermanentRequest(np.ones((500, 500)), 0.5, 10_000), seed=7)
    exact = oracle.const_alpha_permanent(500, 1, 0.5)
    mant = 10 ** (exact.log10 - math.floor(exact.log10))
    ok &= math.floor(exact.log10) == 1132 and round(mant, 3) == 3.078
    good, z = within_se(s.product_hat.log_value, s.se_product.log_value, exact.log)
    ok &= good
    dt = time.perf_counter() - t0
    lines.append(f"n=500 estimate={s.product_hat} rel_se={s.rel_se_pct:.2f}% "
                 f"|err|/se={z:.2f}")
    report(7, ok and dt < 300, "; ".join(lines) + f"; time={dt:.1f}s")


def test_criterion_8_greenhill_pathological():
    m, n, R, C = 24, 31, 24, 17
    mg = Margins([R] + [1] * (m - 1), [C] + [1] * (n - 1))
    s = estimate(sample_batch(ProblemSpec(mg, approx="greenhill"), 2000, seed=8).log_f)
    exact = oracle.bezakova_count(m, n, R, C).log
    rel = abs(math.expm1(s.kappa_hat.log_value - exact))
    report(8, s.delta_hat <= 1e-10 and rel <= 1e-9 and s.dead_fraction == 0,
           f"{m}x{n} delta={s.delta_hat:.1e} rel err={rel:.1e} dead={s.dead_fraction}")


def test_criterion_9_scaling_covariance():
    rng = np.random.default_rng(99)
    z = (rng.random((5, 5)) < 0.5).astype(int)
    r, c = z.sum(axis=1), z.sum(axis=0)
    mg = Margins(r, c)
    w = rng.random((5, 5)) + 0.05
    a = rng.uniform(0.1, 10, 5)
    b = rng.uniform(0.1, 10, 5)
    k1 = estimate(sample_batch(ProblemSpec(mg, weights=w), 2000, seed=9).log_f)
    k2 = estimate(sample_batch(ProblemSpec(mg, weights=np.outer(a, b) * w), 2000,
                               seed=9).log_f)
    gap = (k2.kappa_hat.log_value - k1.kappa_hat.log_value) - (r @ np.log(a) + c @ np.log(b))
    report(9, abs(gap) <= 1e-9, f"|shift error|={abs(gap):.1e}")


def test_criterion_10_complexity():
    per = {}
    for r in (2, 8, 32):
        spec = ProblemSpec(Margins([r] * 500, [r] * 500))
        sample_batch(spec, 2, seed=0)
        runs = []
        for rep in range(3):
            t0 = time.perf_counter()
            sample_batch(spec, 40, seed=rep)
            runs.append((time.perf_counter() - t0) / 40)
        per[r] = float(np.median(runs))
    ok = True
    for lo, hi in ((2, 8), (8, 32)):
        ratio = per[hi] / per[lo]
        # growth no faster than twice linear in d, and not shrinking
        ok &= 0.5 <= ratio <= 2 * hi / lo
    detail = " ".join(f"r={r}:{per[r] * 1e3:.1f}ms" for r in per)
    report(10, ok, detail + f" ratios={per[8] / per[2]:.2f},{per[32] / per[8]:.2f}")


@pytest.mark.slow
def test_full_scale_two_regular_500():
    n = 500
    t0 = time.perf_counter()
    s = estimate(sample_batch(ProblemSpec(Margins([2] * n, [2] * n)), 1000, seed=500).log_f)
    exact = oracle.two_regular_count(n).log
    good, z = within_se(*kappa(s), exact)
    approx = log_n_canfield([2] * n, [2] * n)
    print(f"500x500 r=2: kappa_hat={s.kappa_hat} cv2={s.cv2_hat:.2e} |err|/se={z:.2f} "
          f"approx/exact-1={math.expm1(approx - exact):.2e} "
          f"time={time.perf_counter() - t0:.1f}s")
    assert s.cv2_hat < 1e-4 and good


# reference cv2 magnitudes: 500 x 500 two-regular and 50 x 100 irregular margins
REGULAR_R2_CV2 = {"II": 4e-4, "III": 4e-2, "IV": 2e-1}
IRREGULAR_CV2 = {1: {"I": 1e-3, "II": 5e-2, "III": 5e-1, "IV": 3e0},
          2: {"I": 3e-2, "II": 1e-1, "III": 2e0, "IV": 7e0}}


def _expand(pairs):
    return [v for v, k in pairs for _ in range(k)]


R_TILDE = _expand([(24, 1), (22, 2), (17, 4), (13, 3), (12, 2), (11, 3), (10, 2), (9, 3),
                   (8, 6), (7, 1), (6, 4), (5, 4), (4, 5), (3, 6), (2, 4)])
C_TILDE = _expand([(12, 2), (10, 2), (9, 5), (8, 4), (7, 6), (6, 11), (5, 10), (4, 18),
                   (3, 9), (2, 13), (1, 20)])


@pytest.mark.slow
@pytest.mark.parametrize("cls", ["II", "III", "IV"])
def test_full_scale_weighted_500(cls):
    n = 500
    w = oracle.weight_class(oracle.minstd_canonical(n, n), cls)
    s = estimate(sample_batch(ProblemSpec(Margins([2] * n, [2] * n), weights=w), 1000,
                              seed=501).log_f)
    gap = math.log10(s.cv2_hat / REGULAR_R2_CV2[cls])
    print(f"500x500 r=2 class {cls}: cv2={s.cv2_hat:.2e} "
          f"reference={REGULAR_R2_CV2[cls]:.0e} log10 gap={gap:+.2f}")
    assert abs(gap) <= 1


@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("cls", ["I", "II", "III", "IV"])
def test_full_scale_irregular(k, cls):
    mg = Margins([k * v for v in R_TILDE], [k * v for v in C_TILDE])
    w = oracle.weight_class(oracle.minstd_canonical(50, 100), cls)
    s = estimate(sample_batch(ProblemSpec(mg, weights=w), 1000, seed=502).log_f)
    gap = math.log10(s.cv2_hat / IRREGULAR_CV2[k][cls])
    print(f"50x100 k={k} class {cls}: cv2={s.cv2_hat:.2e} "
          f"reference={IRREGULAR_CV2[k][cls]:.0e} log10 gap={gap:+.2f}")
    assert abs(gap) <= 1
