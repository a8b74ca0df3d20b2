import numpy as np
import pytest

from hawkes_density.models import CountsGrid, ExponentialKernel, InteractionGraph


@pytest.fixture
def make_graph():
    """Factory for graphs with a hand-written adjacency matrix."""

    def _make(theta, p: float = 1.0, mode: str = "independent") -> InteractionGraph:
        theta = np.asarray(theta)
        return InteractionGraph(N=theta.shape[0], mode=mode, p_nominal=p, adjacency=theta)

    return _make


@pytest.fixture
def make_counts():
    def _make(grid, counts) -> CountsGrid:
        return CountsGrid(grid=grid, counts=counts)

    return _make


@pytest.fixture
def exp_kernel():
    """Kernel used throughout the published experiments: Lambda = 2, kappa = 1."""
    return ExponentialKernel(a=2.0, b=1.0)


@pytest.fixture
def ones_graph(make_graph):
    return make_graph(np.ones((2, 2)), p=1.0)


@pytest.fixture
def zero_graph(make_graph):
    return make_graph(np.zeros((4, 4)), p=0.0)
