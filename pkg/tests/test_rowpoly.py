import math
from itertools import combinations

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from binary_margins.rowpoly import precompute_g, v_structural, v_weights


def esp(x, k):
    return sum(math.prod(c) for c in combinations(x, k))


weights = arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 6)),
                 elements=st.one_of(st.just(0.0), st.floats(0.1, 5.0)))


@settings(max_examples=80, deadline=None)
@given(weights, st.data())
def test_table_matches_brute_force(w, data):
    m, n = w.shape
    r = np.array(data.draw(st.lists(st.integers(0, n), min_size=m, max_size=m)))
    g = precompute_g(w, r)
    for i in range(m):
        for j in range(n + 1):
            for k in range(r[i] + 1):
                want = esp(w[i, j:], k)
                got = g.get(i, j, k)
                if want == 0:
                    assert got == -np.inf
                else:
                    assert math.isclose(math.exp(got), want, rel_tol=1e-10)
    assert g.get(0, 0, r[0] + 1) == -np.inf


def test_v_is_one_for_uniform_weights():
    w = np.ones((3, 5))
    r = np.array([2, 1, 3])
    logv, force, dead = v_weights(precompute_g(w, r), w, r, 0)
    assert np.allclose(logv, 0)
    assert len(force) == 0 and len(dead) == 0


def test_v_definition():
    rng = np.random.default_rng(1)
    w = rng.random((3, 6)) + 0.2
    r = np.array([2, 3, 1])
    g = precompute_g(w, r)
    for j in range(3):
        logv, _, _ = v_weights(g, w, r, j)
        n_after = 6 - j - 1
        for i in range(3):
            k = r[i]
            want = w[i, j] * esp(w[i, j + 1:], k - 1) / esp(w[i, j + 1:], k) \
                * (n_after - k + 1) / k
            assert math.isclose(math.exp(logv[i]), want, rel_tol=1e-12)


def test_forced_and_dead_rows():
    w = np.array([[1.0, 2.0, 0.0],
                  [0.0, 1.0, 1.0],
                  [0.0, 1.0, 0.0]])
    r = np.array([2, 2, 1])
    logv, force, dead = v_weights(precompute_g(w, r), w, r, 0)
    # row 0 has a single positive entry after column 0 but needs two ones
    assert 0 in force and 0 not in dead
    # row 2 can only use column 1
    assert logv[2] == -np.inf and 2 not in force
    # row 1 needs both remaining columns and cannot take column 0
    assert logv[1] == -np.inf
    # a one still owed but no positive weight left from column 1 on
    w2 = np.array([[1.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    r2 = np.array([1, 2])
    _, force, dead = v_weights(precompute_g(w2, r2), w2, r2, 1)
    assert 0 in force and 0 in dead


def test_structural_v_counts_support():
    w = np.array([[1.0, 2.0, 0.0, 1.5],
                  [3.0, 1.0, 1.0, 1.0]])
    r = np.array([2, 1])
    a = (w > 0).astype(int)
    logv, force = v_structural(precompute_g(w, r), w, a, r, 0)
    # row 0: two positive slots after column 0
    want0 = 1.0 * esp([2.0, 1.5], 1) / esp([2.0, 1.5], 2) * (2 - 2 + 1) / 2
    want1 = 3.0 * esp([1.0, 1.0, 1.0], 0) / esp([1.0, 1.0, 1.0], 1) * (3 - 1 + 1) / 1
    assert math.isclose(math.exp(logv[0]), want0)
    assert math.isclose(math.exp(logv[1]), want1)
    assert len(force) == 0
