"""Seeded Monte-Carlo revenue estimates on untruncated hard instances."""
from __future__ import annotations

import math
import numpy as np

from typing import Optional

from shrinklab.constants import MONTE_CARLO_CHUNK
from shrinklab.cogs.models.distributions import BalancedSpec, HardInstance
from shrinklab.cogs.models.exceptions import GridMismatch, InvalidParameters
from shrinklab.cogs.models.mechanism import Mechanism
from shrinklab.cogs.models.reports import MonteCarloEstimate, RngSeed
from shrinklab.cogs.utils.logger import get_logger

logger = get_logger("montecarlo")

def sample_middle_indices(rng: np.random.Generator, spec: BalancedSpec, n_middle: int, size: int) -> np.ndarray:
    """Draws untruncated balanced indices: a geometric block, then a uniform position inside it.

    Returns an integer array of shape (size, n_middle) with one-based indices.
    """
    blocks = rng.geometric(spec.epsilon, size=(size, n_middle))
    offsets = rng.integers(1, spec.d + 1, size=(size, n_middle))
    return (blocks - 1) * spec.d + offsets

def fold_indices(indices: np.ndarray, spec: BalancedSpec) -> np.ndarray:
    """Maps one-based indices to zero-based grid positions, sending indices past K d to the last block.

    The residue modulo d is kept, so h is unchanged.
    """
    zero_based = indices - 1
    last_block = (spec.trunc_blocks - 1) * spec.d
    return np.where(zero_based < spec.support_size, zero_based, last_block + zero_based % spec.d)

def sample_strong_levels(rng: np.random.Generator, inst: HardInstance, levels: np.ndarray) -> np.ndarray:
    """Draws bidder 1's grid index from D_h for every entry of levels."""
    cumulative = np.cumsum(np.asarray(inst.family.q, dtype=float))
    u = rng.random(levels.shape)
    return np.minimum(np.searchsorted(cumulative, u, side="right"), levels)

def monte_carlo_revenue(
    mech: Mechanism,
    inst: HardInstance,
    samples: int,
    seed: RngSeed,
    chunk: Optional[int] = None
) -> MonteCarloEstimate:
    """Estimates a mechanism's expected revenue on the untruncated instance.

    The mechanism may be over the full market or the shrunken one. Middle indices
    beyond the retained blocks are evaluated at the same-residue index of the last block.
    """
    if int(samples) != samples or samples < 1:
        raise InvalidParameters("at least one sample is required", "samples")
    if inst.joint_n.same_grids(mech.grids):
        with_weak = True
    elif inst.joint_shrunk.same_grids(mech.grids):
        with_weak = False
    else:
        raise GridMismatch("mechanism grids match neither market of the instance", "grids")

    chunk = chunk or MONTE_CARLO_CHUNK
    spec = inst.params
    revenue = mech.pay.sum(axis=0)
    rng = seed.generator()
    total = 0.0
    total_sq = 0.0
    drawn = 0
    while drawn < samples:
        size = min(chunk, samples - drawn)
        middle = fold_indices(sample_middle_indices(rng, spec, inst.n_middle, size), spec)
        levels = inst.levels[tuple(middle.T)]
        strong = sample_strong_levels(rng, inst, levels)
        index = (strong,) + tuple(middle.T)
        if with_weak:
            index += (np.zeros(size, dtype=int),)
        paid = revenue[index]
        total += float(paid.sum())
        total_sq += float(np.square(paid).sum())
        drawn += size

    estimate = total / samples
    if samples == 1:
        return MonteCarloEstimate(estimate, 0.0, samples)
    variance = max(0.0, (total_sq - samples * estimate ** 2) / (samples - 1))
    std_error = math.sqrt(variance / samples)
    logger.debug(f"Monte Carlo over {samples} samples: {estimate!r} +- {std_error!r}.")
    return MonteCarloEstimate(estimate, std_error, samples)
