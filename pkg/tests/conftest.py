import numpy as np
import pytest

from gravplume import ForwardOperator
from gravplume.workbench import WorkbenchConfig, build_sample


@pytest.fixture(scope="session")
def desk_cfg():
    return WorkbenchConfig()


@pytest.fixture(scope="session")
def desk_setup(desk_cfg):
    grid = desk_cfg.grid()
    sensors = desk_cfg.sensors()
    op = ForwardOperator(grid, sensors)
    return desk_cfg, grid, sensors, op


@pytest.fixture(scope="session")
def desk_samples(desk_setup):
    """Five deterministic desk-scale synthetic samples on the 16^3 grid."""
    cfg, grid, _, op = desk_setup
    return [build_sample(grid, op, cfg, index=i, seed=42) for i in range(5)]


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
