"""Shared grids and kernel workspaces.

Workspace fixtures are session-scoped: lag-matrix assembly is the expensive
part of the kernel layer and the tables are reusable across tests.
"""
import numpy as np
import pytest

from mildprandtl import make_grid
from mildprandtl.kernels import KernelWorkspace

T_PROBE = 0.1
M_PROBE = 40


@pytest.fixture(scope="session")
def ugrid():
    """Uniform probe grid (fine enough for 1e-10 saturation checks)."""
    return make_grid(8, 256, 15.0, scheme="uniform")


@pytest.fixture(scope="session")
def sgrid():
    """Default-shaped stretched grid."""
    return make_grid(8, 128, 15.0, scheme="stretched")


@pytest.fixture(scope="session")
def uws(ugrid):
    return KernelWorkspace(ugrid)


@pytest.fixture(scope="session")
def sws(sgrid):
    return KernelWorkspace(sgrid)


@pytest.fixture(scope="session")
def probe_times():
    return np.linspace(0.0, T_PROBE, M_PROBE + 1)


def trusted(grid, t):
    """Rows unaffected by the Y=L truncation for horizons up to t."""
    return grid.y_nodes <= grid.L - 8.0 * np.sqrt(4.0 * t)
