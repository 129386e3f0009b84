"""Shared fixtures: small grids and geometries sized for fast tests."""

import math

import numpy as np
import pytest

from fsorelay.channel import ChannelModel, LinkGeometry
from fsorelay.optics import GridSpec
from fsorelay.system import SystemParams


@pytest.fixture(scope="session")
def params() -> SystemParams:
    return SystemParams()


@pytest.fixture(scope="session")
def small_free_grid() -> GridSpec:
    """Coarse free-space grid covering the same 512 mm window as the default."""
    return GridSpec(n_points=256, spacing=2e-3)


@pytest.fixture(scope="session")
def small_facet_grid() -> GridSpec:
    return GridSpec(n_points=256, spacing=0.3e-6)


@pytest.fixture(scope="session")
def small_model(small_free_grid, small_facet_grid) -> ChannelModel:
    """Full channel on the coarse grids, moderate turbulence."""
    return ChannelModel(
        LinkGeometry(),
        cn2=1e-13,
        master_seed=99,
        free_grid=small_free_grid,
        facet_grid=small_facet_grid,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def q_for_ber(target: float) -> float:
    """Gaussian Q factor hitting a target OOK error rate, by bisection."""
    lo, hi = 0.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(mid / math.sqrt(2.0)) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Read the module instance pytest actually executed; importing here
    # would create a fresh copy with an empty line list.
    import sys

    lines = []
    for name, module in sys.modules.items():
        if name.rsplit(".", 1)[-1] == "test_acceptance" and module is not None:
            lines = getattr(module, "ACCEPTANCE_LINES", [])
            if lines:
                break
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
