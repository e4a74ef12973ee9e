import numpy as np
import pytest

from dictinv import harness


@pytest.fixture(scope="session")
def default_ws():
    """The default experiment geometry (T=10, 2001 nodes, p=400), built once."""
    return harness.build_workspace(harness.ExperimentConfig())


@pytest.fixture(scope="session")
def small_ws():
    """A light geometry for pipeline tests that do not need the full dictionary."""
    cfg = harness.ExperimentConfig(fine_nodes=401, p1=3, p2=6, b_step=0.5,
                                   n_obs=32, alpha_grid_N=40, replicates=2)
    return cfg, harness.build_workspace(cfg)


def rng_for(test_id: int):
    return np.random.default_rng(987_000 + test_id)
