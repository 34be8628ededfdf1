import numpy as np
import pytest

from dcldmd.data import SnapshotSet


def random_snapshots(seed, M=12, n=2, m=1, scale=3.0, u_scale=1.0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-scale, scale, size=(n, M))
    U = rng.uniform(-u_scale, u_scale, size=(m, M))
    Y = np.tanh(X) + 0.3 * np.roll(X, 1, axis=0) + 0.5 * U.sum(axis=0)
    return SnapshotSet(X, U, Y)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_set():
    return random_snapshots(0)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
