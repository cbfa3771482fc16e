import numpy as np
import pytest


def corr(a, b):
    return float(np.corrcoef(a, b)[0, 1])


@pytest.fixture
def two_tone():
    t = np.arange(1, 1001, dtype=float)
    fast = np.sin(2 * np.pi * 0.2 * t)
    slow = 0.8 * np.sin(2 * np.pi * 0.02 * t)
    return t, fast, slow


def random_walk(seed, n=256):
    rng = np.random.default_rng(seed)
    return np.cumsum(rng.standard_normal(n))


def ar_seasonal(n=300, seed=0):
    rng = np.random.default_rng(seed)
    e = 0.5 * rng.standard_normal(n)
    x = np.zeros(n)
    for i in range(1, n):
        x[i] = 0.7 * x[i - 1] + e[i]
    return x + 2.0 * np.sin(2 * np.pi * np.arange(n) / 20)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
