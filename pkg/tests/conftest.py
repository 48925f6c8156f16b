import numpy as np
import pytest

from qavkdv.spectral import make_grid

ACCEPTANCE_LINES = []


def random_trig(grid, rng, degree=None, amplitude=1.0):
    """Random real trigonometric polynomial of degree < N/2 sampled on the grid."""
    degree = grid.N // 2 - 1 if degree is None else degree
    x = grid.nodes
    L = grid.length
    u = rng.normal() * np.ones(grid.N) * amplitude
    for m in range(1, degree + 1):
        w = 2 * np.pi * m / L
        decay = amplitude / m**2
        u += decay * (rng.normal() * np.cos(w * (x - grid.a)) + rng.normal() * np.sin(w * (x - grid.a)))
    return u


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def grid64():
    return make_grid(0.0, 2 * np.pi, 64)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
