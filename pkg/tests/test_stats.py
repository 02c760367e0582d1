import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynsem.core import IntervalObservations, Susceptibility
from dynsem.stats import (
    PowerIterationError,
    SuffStats,
    geometric_weight_sum,
    lipschitz_constant,
    lipschitz_matrix,
    node_view,
    update_suff_stats,
)

from conftest import random_history, random_x


def run(history, beta, sigma0=0.0):
    n, c = history[0].shape
    s = SuffStats.initial(n, c, sigma0)
    for obs in history:
        s = update_suff_stats(s, obs, beta)
    return s


def direct(history, beta, sigma0=0.0):
    t = len(history)
    n = history[0].shape[0]
    sigma = sigma0 * beta**t * np.eye(n)
    ybar = 0.0
    for tau, obs in enumerate(history, start=1):
        y = obs.infection_times
        sigma = sigma + beta ** (t - tau) * (y @ y.T)
        ybar = ybar + beta ** (t - tau) * y
    return sigma, ybar


def test_unweighted_sum(rng):
    h = random_history(rng, 3, 2, 2)
    s = run(h, 1.0)
    y1, y2 = (o.infection_times for o in h)
    np.testing.assert_allclose(s.sigma, y1 @ y1.T + y2 @ y2.T, rtol=1e-14)
    np.testing.assert_allclose(s.ybar, y1 + y2, rtol=1e-14)
    assert s.beta_pow_sum == 2.0 and s.t == 2


def test_full_forgetting(rng):
    h = random_history(rng, 3, 2, 4)
    s = run(h, 0.0, sigma0=1.0)
    y = h[-1].infection_times
    assert np.array_equal(s.sigma, 0.5 * (y @ y.T + (y @ y.T).T))
    np.testing.assert_array_equal(s.ybar, y)


def test_half_forgetting_scalar():
    h = [IntervalObservations([[1.0]]), IntervalObservations([[2.0]])]
    s = run(h, 0.5)
    assert s.sigma[0, 0] == 4.5
    assert s.ybar[0, 0] == 2.5
    assert s.beta_pow_sum == 1.5


def test_update_dimension_mismatch():
    with pytest.raises(ValueError):
        update_suff_stats(SuffStats.initial(2, 2), IntervalObservations(np.zeros((2, 3))), 0.9)


@pytest.mark.parametrize("beta", [0.3, 0.9, 1.0])
def test_beta_pow_sum(beta):
    s = run([IntervalObservations(np.ones((1, 1)))] * 7, beta)
    assert s.beta_pow_sum == pytest.approx(geometric_weight_sum(beta, 7), rel=1e-14)
    assert s.beta_pow_sum == pytest.approx(sum(beta**k for k in range(7)), rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.05, 1.0), st.integers(1, 100), st.integers(1, 32), st.integers(1, 6))
def test_recursion_matches_definition(seed, beta, t, n, c):
    r = np.random.default_rng(seed)
    h = random_history(r, n, c, t)
    s = run(h, beta, sigma0=1.0)
    sig, yb = direct(h, beta, sigma0=1.0)
    assert np.linalg.norm(s.sigma - sig) <= 1e-10 * np.linalg.norm(sig)
    assert np.linalg.norm(s.ybar - yb) <= 1e-10 * max(np.linalg.norm(yb), 1e-300)
    assert np.abs(s.sigma - s.sigma.T).max() <= 1e-12 * max(1.0, np.abs(s.sigma).max())


def test_lipschitz_trivial_cases():
    x = Susceptibility(np.zeros((2, 2)))
    s = run([IntervalObservations(np.eye(2))], 1.0)
    assert lipschitz_constant(s, x) == pytest.approx(1.0, rel=1e-8)
    s = run([IntervalObservations(np.diag([3.0, 1.0]))], 1.0)
    assert lipschitz_constant(s, x) == pytest.approx(9.0, rel=1e-8)


def test_lipschitz_matches_eigensolver(rng):
    h = random_history(rng, 4, 2, 3)
    x = random_x(rng, 4, 2)
    s = run(h, 0.9)
    # oracle: weighted sum of stacked Gram matrices built straight from the data
    m = np.zeros((8, 8))
    for tau, obs in enumerate(h, start=1):
        z = np.vstack([obs.infection_times, x.values])
        m += 0.9 ** (3 - tau) * z @ z.T
    assert np.allclose(lipschitz_matrix(s, x), m, rtol=1e-12)
    assert lipschitz_constant(s, x) == pytest.approx(np.linalg.eigvalsh(m)[-1], rel=1e-6)


def test_lipschitz_cache_and_invalidation(rng):
    h = random_history(rng, 3, 2, 2)
    x = random_x(rng, 3, 2)
    s = run(h[:1], 1.0)
    first = lipschitz_constant(s, x)
    assert s.lipschitz == first
    s2 = update_suff_stats(s, h[1], 1.0)
    assert s2.lipschitz is None
    assert lipschitz_constant(s2, x) >= first * (1 - 1e-8)


def test_lipschitz_monotone_under_unit_beta(rng):
    x = random_x(rng, 5, 3)
    s = SuffStats.initial(5, 3, 0.0)
    prev = 0.0
    for obs in random_history(rng, 5, 3, 20):
        s = update_suff_stats(s, obs, 1.0)
        cur = lipschitz_constant(s, x)
        assert cur >= prev * (1 - 1e-8)
        prev = cur


def test_power_iteration_dominates_rayleigh_probes(rng):
    h = random_history(rng, 6, 4, 5)
    x = random_x(rng, 6, 4)
    s = run(h, 0.8)
    lip = lipschitz_constant(s, x)
    m = lipschitz_matrix(s, x)
    for v in rng.standard_normal((200, 12)):
        assert v @ m @ v / (v @ v) <= lip * (1 + 1e-8)


def test_lipschitz_degenerate_data():
    s = run([IntervalObservations(np.zeros((2, 2)))], 1.0)
    with pytest.raises(PowerIterationError):
        lipschitz_constant(s, Susceptibility(np.zeros((2, 2))))


def test_node_view_small_cases():
    s = SuffStats(np.array([[1.0, 2.0], [2.0, 7.0]]), np.zeros((2, 1)), 1.0, 1)
    v = node_view(s, np.zeros((2, 1)), 0)
    assert v.sigma_minus_i.shape == (1, 1) and v.sigma_minus_i[0, 0] == 7.0
    s = SuffStats(np.eye(3), np.zeros((3, 1)), 1.0, 1)
    v = node_view(s, np.zeros((3, 1)), 1)
    assert np.array_equal(v.sigma_minus_i, np.eye(2))
    assert np.array_equal(v.sigma_col_minus_i, [0.0, 0.0])


def test_node_view_index_filter_oracle(rng):
    s = run(random_history(rng, 4, 3, 3), 0.9)
    x = random_x(rng, 4, 3)
    for i in range(4):
        keep = [k for k in range(4) if k != i]
        v = node_view(s, x, i)
        assert np.array_equal(v.sigma_minus_i, np.array([[s.sigma[r, c] for c in keep] for r in keep]))
        assert np.array_equal(v.sigma_col_minus_i, np.array([s.sigma[r, i] for r in keep]))
        assert np.array_equal(v.ybar_minus_i, np.array([s.ybar[r] for r in keep]))
        assert np.array_equal(v.ybar_row_i, s.ybar[i])
        assert np.array_equal(v.x_i, x.values[i])


def test_node_view_out_of_range():
    with pytest.raises(IndexError):
        node_view(SuffStats.initial(3, 1), np.zeros((3, 1)), 3)
