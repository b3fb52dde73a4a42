import numpy as np
import pytest

from spregimes import SimulationSpec, build_grid_graph, generate_suite


@pytest.fixture(scope="session")
def grid25():
    return build_grid_graph(25, 25)


@pytest.fixture(scope="session")
def rect_sim(grid25):
    """One low-noise striped simulation shared across test modules."""
    spec = SimulationSpec(seed=3, sigma=0.1)
    return generate_suite(spec, 1)[0]


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
