import numpy as np
import pytest

from curvlab.curvature import random_curvature

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_tensors(n, count, seed, unit=False):
    rng = np.random.default_rng(seed)
    return [random_curvature(n, rng, unit=unit) for _ in range(count)]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
