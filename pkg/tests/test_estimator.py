import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from binary_margins import (
    AlphaPermanentRequest,
    LogBigNumber,
    Margins,
    ProblemSpec,
    alpha_permanent,
    cycle_count,
    estimate,
    log_importance_weight,
    sample_matrix,
)
from binary_margins import oracle
from binary_margins.estimator import Accumulator
from binary_margins.proposal import sample_stream


def test_log_big_number_parts():
    x = LogBigNumber.from_log10(2266 + math.log10(2.27658))
    assert x.parts() == (2.27658, 2266)
    assert str(LogBigNumber(math.log(9.999999))) == "1.00000e+1"
    assert LogBigNumber(-math.inf).parts() == (0.0, 0)
    assert x.to_dict() == {"mantissa": 2.27658, "exp10": 2266}


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(2, 40), elements=st.floats(-30, 30)))
def test_moments_match_numpy(log_f):
    s = estimate(log_f)
    f = np.exp(log_f)
    assert math.isclose(math.exp(s.kappa_hat.log_value), f.mean(), rel_tol=1e-9)
    cv2 = f.var(ddof=1) / f.mean() ** 2
    assert math.isclose(s.cv2_hat, cv2, rel_tol=1e-7, abs_tol=1e-12)
    assert math.isclose(s.ess, len(f) / (1 + cv2), rel_tol=1e-7)
    delta = f.max() / f.min() - 1
    assert math.isclose(s.delta_hat, delta, rel_tol=1e-7, abs_tol=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(4, 60), elements=st.floats(-500, 500)),
       st.integers(1, 3))
def test_merge_is_order_free(log_f, cut):
    k = len(log_f) * cut // 4
    whole = Accumulator.from_samples(log_f).summary()
    parts = Accumulator.from_samples(log_f[:k]).merge(
        Accumulator.from_samples(log_f[k:])).summary()
    assert math.isclose(whole.kappa_hat.log_value, parts.kappa_hat.log_value,
                        rel_tol=1e-12, abs_tol=1e-9)
    if whole.cv2_hat > 1e-9:
        assert math.isclose(whole.cv2_hat, parts.cv2_hat, rel_tol=1e-6)


def test_huge_magnitudes():
    log_f = np.array([5000.0, 5000.0 + math.log(3)])
    s = estimate(log_f)
    assert math.isclose(s.kappa_hat.log_value, 5000 + math.log(2), rel_tol=1e-15)
    assert math.isclose(s.delta_hat, 2.0)


def test_dead_samples():
    s = estimate(np.array([0.0, -np.inf, math.log(2), -np.inf]))
    assert s.dead_fraction == 0.5
    assert s.delta_excludes_dead
    assert math.isclose(s.delta_hat, 1.0)
    assert math.isclose(math.exp(s.kappa_hat.log_value), 0.75)


def test_statistic_estimates():
    log_f = np.log(np.array([1.0, 2.0, 3.0, 4.0]))
    h = np.array([1.0, 0.0, 2.0, 1.0])
    s = estimate(log_f, h=h)
    assert math.isclose(s.mu_hat, (1 + 0 + 6 + 4) / 10)
    assert math.isclose(math.exp(s.product_hat.log_value), 11 / 4)
    g = np.exp(log_f) * h
    want = 100 * g.std(ddof=1) / math.sqrt(4) / g.mean()
    assert math.isclose(s.rel_se_pct, want)
    with np.errstate(divide="ignore"):
        s2 = estimate(log_f, log_h=np.log(h))
    assert math.isclose(s2.mu_hat, s.mu_hat)


def test_log_importance_weight():
    spec = ProblemSpec(Margins([1, 1], [1, 1]), weights=[[2.0, 1.0], [1.0, 3.0]])
    rec = sample_matrix(spec, sample_stream(0, 0))
    lw = log_importance_weight(rec, spec.weights)
    assert math.isclose(lw, rec.log_f)
    assert math.isclose(log_importance_weight(rec), rec.log_f)


def test_cycle_count():
    assert cycle_count(np.eye(4, dtype=int)) == 4
    assert cycle_count(np.roll(np.eye(5, dtype=int), 1, axis=0)) == 1
    z = np.zeros((4, 4), dtype=int)
    for j, i in enumerate([1, 0, 3, 2]):
        z[i, j] = 1
    assert cycle_count(z) == 2
    with pytest.raises(ValueError):
        cycle_count(np.ones((2, 2)))


def _alpha_perm_exact(w, alpha):
    n = len(w)
    total = 0.0
    for p in permutations(range(n)):
        z = np.zeros((n, n), dtype=int)
        z[list(p), range(n)] = 1
        total += alpha ** cycle_count(z) * math.prod(w[p[j], j] for j in range(n))
    return total


def test_alpha_permanent_small():
    rng = np.random.default_rng(2)
    w = rng.random((5, 5)) + 0.1
    for alpha in (0.5, 1.0, 2.0):
        s = alpha_permanent(AlphaPermanentRequest(w, alpha, 4000), seed=1)
        exact = _alpha_perm_exact(w, alpha)
        est = math.exp(s.product_hat.log_value)
        se = math.exp(s.se_product.log_value)
        print(alpha, est, exact, se)
        assert abs(est - exact) < 4 * se
    with pytest.raises(ValueError):
        alpha_permanent(AlphaPermanentRequest(w, 0.0, 10))


def test_alpha_one_is_the_permanent():
    w = np.arange(1, 17, dtype=float).reshape(4, 4)
    s = alpha_permanent(AlphaPermanentRequest(w, 1.0, 2000), seed=4)
    exact = oracle.exact_permanent(w.astype(int)).value
    est = math.exp(s.product_hat.log_value)
    assert abs(est - exact) < 4 * math.exp(s.se_product.log_value)
    assert math.isclose(s.mu_hat, 1.0)
