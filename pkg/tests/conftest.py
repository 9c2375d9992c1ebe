import numpy as np
import pytest

from wsos.dataset import Dataset
from wsos.numerics import RandomStream

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def stream():
    return RandomStream(1234)


def blobs(n_neg=40, n_pos=10, dim=2, gap=4.0, seed=0, name="blobs"):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0.0, 1.0, (n_neg, dim)), rng.normal(gap, 1.0, (n_pos, dim))])
    y = np.r_[np.zeros(n_neg), np.ones(n_pos)]
    return Dataset(X, y, name)


@pytest.fixture
def separable():
    return blobs(60, 20, dim=2, gap=5.0, seed=3, name="separable")
