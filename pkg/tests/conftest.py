import numpy as np
import pytest

from shrinklab.constants import Z_DEFAULT
from shrinklab.auction.distributions import build_hard_instance
from shrinklab.cogs.models.distributions import BalancedSpec, JointDistribution

@pytest.fixture(scope="session")
def instance():
    """The truncated three-bidder instance used throughout: d=8, eps=0.01, K=3."""
    return build_hard_instance(3, BalancedSpec(0.01, 8, 3), Z_DEFAULT)

@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

@pytest.fixture
def single_bidder():
    """One bidder with values {1, 2}, each with probability 1/2."""
    return JointDistribution(1, (np.array([1.0, 2.0]),), {(0,): 0.5, (1,): 0.5})

@pytest.fixture
def correlated_pair():
    """Two bidders whose values are equal, 1 or 2 with probability 1/2."""
    grids = (np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    return JointDistribution(2, grids, {(0, 0): 0.5, (1, 1): 0.5})

def random_distribution(rng: np.random.Generator, n_bidders: int, grid_size: int, sparsity: float = 0.3) -> JointDistribution:
    """Draws distinct integer values per bidder and a random pmf with some zero profiles."""
    grids = tuple(np.sort(rng.choice(np.arange(1, 11), size=grid_size, replace=False)).astype(float) for _ in range(n_bidders))
    shape = (grid_size,) * n_bidders
    weights = rng.random(shape) * (rng.random(shape) > sparsity)
    if weights.sum() == 0:
        weights.flat[0] = 1.0
    return JointDistribution.from_dense(grids, weights / weights.sum())
