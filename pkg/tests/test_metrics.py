import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynsem.metrics import edge_count, metric_trace, mse, support_metrics


def test_mse_trivial(rng):
    truth = rng.standard_normal((4, 4))
    assert mse(truth, truth) == 0.0
    assert mse(np.zeros((4, 4)), truth) == pytest.approx(np.sum(truth**2) / 16, rel=1e-15)


def test_mse_loop_oracle(rng):
    est, truth = rng.standard_normal((2, 4, 4))
    total = 0.0
    for i in range(4):
        for j in range(4):
            total += (est[i][j] - truth[i][j]) ** 2
    assert mse(est, truth) == pytest.approx(total / 16, rel=1e-12, abs=1e-12)


def test_mse_shape_mismatch():
    with pytest.raises(ValueError):
        mse(np.zeros((3, 3)), np.zeros((4, 4)))


def test_edge_count():
    assert edge_count(np.zeros((5, 5))) == 0
    a = np.zeros((4, 4))
    a[0, 1], a[2, 3], a[3, 0] = 1.0, -0.2, 3.0
    assert edge_count(a, 0.0) == 3
    assert edge_count(a, 0.5) == 2


def test_edge_count_scan_oracle(rng):
    a = rng.standard_normal((64, 64)) * (rng.random((64, 64)) < 0.2)
    np.fill_diagonal(a, 0)
    count = sum(1 for i in range(64) for j in range(64) if i != j and abs(a[i, j]) > 0.3)
    assert edge_count(a, 0.3) == count


def test_support_metrics_conventions():
    truth = np.array([[0, 1.0], [0.5, 0]])
    assert support_metrics(truth, truth) == (1.0, 1.0)
    assert support_metrics(np.zeros((2, 2)), truth) == (1.0, 0.0)


def test_support_metrics_set_oracle(rng):
    est = rng.standard_normal((6, 6)) * (rng.random((6, 6)) < 0.5)
    tru = rng.standard_normal((6, 6)) * (rng.random((6, 6)) < 0.4)
    e = {(i, j) for i in range(6) for j in range(6) if i != j and abs(est[i, j]) > 0.5}
    t = {(i, j) for i in range(6) for j in range(6) if i != j and abs(tru[i, j]) > 1e-6}
    p, r = support_metrics(est, tru, 0.5)
    assert p == len(e & t) / len(e)
    assert r == len(e & t) / len(t)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 2), st.floats(0, 2))
def test_symmetry_and_recall_monotone(seed, th1, th2):
    r = np.random.default_rng(seed)
    a, b = r.standard_normal((2, 5, 5))
    assert mse(a, b) == mse(b, a)
    lo, hi = sorted((th1, th2))
    assert support_metrics(a, b, hi)[1] <= support_metrics(a, b, lo)[1]


def test_metric_trace_without_truth():
    trace = metric_trace([np.zeros((3, 3)), np.ones((3, 3)) - np.eye(3)])
    assert trace.header == ["t", "nnz"]
    assert trace.rows() == [(1, 0), (2, 6)]
