import math

import numpy as np
import pytest

from tempfreq.calibration import calibrate
from tempfreq.grid import DensitySeries, TimeGrid
from tempfreq.synthetic import phase_sample, wiggly_curve


def gaussian_pdf(t, mu, sd):
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * ((t - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))


def gaussian_series(grid, mu, sd):
    return DensitySeries(grid, gaussian_pdf(grid.values, mu, sd))


def point_mass(grid, t):
    v = np.zeros(grid.count)
    v[grid.index_of(t)] = 1.0 / grid.step
    return DensitySeries(grid, v)


@pytest.fixture(scope="session")
def curve():
    return wiggly_curve()


@pytest.fixture(scope="session")
def phase_grid():
    return TimeGrid.from_range(1000, 2200, 1)


@pytest.fixture(scope="session")
def phase_posteriors(curve, phase_grid):
    """The 20-date single-phase sample used by the convergence and smoothing checks."""
    return [calibrate(d, curve, phase_grid) for d in phase_sample(curve)]


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
