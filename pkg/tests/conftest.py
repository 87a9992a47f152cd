"""Shared fixtures: the expensive transforms are built once per session."""

import math
import warnings

import pytest

from levyflow.models import IsotropicStable
from levyflow.pde import CappedPowerDrift, SolverGrid, ZeroDrift
from levyflow.zvonkin import build_transform

warnings.filterwarnings("ignore", category=UserWarning)


@pytest.fixture(scope="session")
def flow_grid():
    return SolverGrid(half_period=32.0, n_x=8192, n_steps=256)


@pytest.fixture(scope="session")
def model_15():
    return IsotropicStable(alpha=1.5, dim=1)


@pytest.fixture(scope="session")
def drift_07():
    return CappedPowerDrift(beta=0.7, amplitude=1.0)


@pytest.fixture(scope="session")
def transform_15_07(model_15, drift_07, flow_grid):
    """The canonical (alpha, beta, gamma) = (1.5, 0.7, 0.15) transform."""
    return build_transform(model_15, drift_07, gamma=0.15, grid=flow_grid)


@pytest.fixture(scope="session")
def cauchy_model():
    return IsotropicStable(alpha=1.0, dim=1)


@pytest.fixture(scope="session")
def cauchy_trivial_transform(cauchy_model):
    """Zero-drift transform on a wide coarse torus (heavy Cauchy tails)."""
    grid = SolverGrid(half_period=128.0, n_x=4096, n_steps=256)
    return build_transform(cauchy_model, ZeroDrift(), gamma=0.3, grid=grid)


@pytest.fixture(scope="session")
def pde_grid_pi():
    """Sinusoid-compatible torus: half period a multiple of pi."""
    return SolverGrid(half_period=8.0 * math.pi, n_x=2048, n_steps=256)
