import numpy as np
import pytest

from dynsem.core import IntervalObservations, Susceptibility


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_history(rng, n, c, t, scale=1.0):
    return [IntervalObservations(scale * rng.standard_normal((n, c)), k) for k in range(1, t + 1)]


def random_x(rng, n, c, high=1.0):
    return Susceptibility(rng.uniform(0.0, high, size=(n, c)))


def random_hollow(rng, n, scale=0.3):
    a = scale * rng.standard_normal((n, n))
    np.fill_diagonal(a, 0.0)
    return a


ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
