"""Balanced laws, the equal-revenue family and the truncated hard instances."""
from __future__ import annotations

import math
import numpy as np

from fractions import Fraction
from typing import Dict, NamedTuple, Tuple

from shrinklab.constants import INSTANCE_SIZE_CAP
from shrinklab.cogs.models.distributions import BalancedSpec, EqualRevenueFamily, HardInstance, JointDistribution
from shrinklab.cogs.models.exceptions import InvalidParameters, SizeCapExceeded
from shrinklab.cogs.utils.aliases import Profile, Scalar
from shrinklab.cogs.utils.logger import get_logger

logger = get_logger("distributions")


class TruncatedBalanced(NamedTuple):
    pmf: np.ndarray
    dropped: float


def balanced_pmf(spec: BalancedSpec, k: int) -> float:
    """Returns Pr[X = k] = eps (1 - eps)^(ceil(k/d) - 1) / d for the untruncated law."""
    if int(k) != k or k < 1:
        raise InvalidParameters("index must be a positive integer", "k")
    block = -(-int(k) // spec.d)
    return spec.epsilon * (1 - spec.epsilon) ** (block - 1) / spec.d

def truncated_balanced(spec: BalancedSpec) -> TruncatedBalanced:
    """Returns the law restricted to {1..K d} and renormalized, with the dropped mass.

    pmf[k - 1] is the probability of index k.
    """
    blocks = np.repeat(np.arange(spec.trunc_blocks), spec.d)
    raw = spec.epsilon * (1 - spec.epsilon) ** blocks / spec.d
    dropped = spec.dropped_mass
    return TruncatedBalanced(raw / (1 - dropped), dropped)

def residue_distribution(spec: BalancedSpec, truncated: bool = True) -> np.ndarray:
    """Returns Pr[X mod d = r] for r = 0..d-1."""
    if not truncated:
        # Each block puts eps (1 - eps)^c / d on every residue; the blocks sum to 1/d
        return np.full(spec.d, 1.0 / spec.d)
    pmf = truncated_balanced(spec).pmf
    residues = np.arange(1, spec.support_size + 1) % spec.d
    return np.bincount(residues, weights=pmf, minlength=spec.d)

def convolve_residues(spec: BalancedSpec, n_middle: int) -> np.ndarray:
    """Returns the law of (X_1 + ... + X_n_middle) mod d by cyclic convolution of truncated residues."""
    if n_middle < 1:
        raise InvalidParameters("at least one middle bidder is required", "n_middle")
    single = residue_distribution(spec, truncated=True)
    total = single.copy()
    for _ in range(n_middle - 1):
        total = np.array([
            sum(total[a] * single[(r - a) % spec.d] for a in range(spec.d)) for r in range(spec.d)
        ])
    return total

def value_of_index(epsilon: float, k: int) -> float:
    """Returns the middle-bidder value 1 - 2 eps + eps (1 - 2^-k)."""
    if not 0 < epsilon < 1:
        raise InvalidParameters("epsilon must lie strictly between 0 and 1", "epsilon")
    if int(k) != k or k < 1:
        raise InvalidParameters("index must be a positive integer", "k")
    return 1 - 2 * epsilon + epsilon * (1 - 0.5 ** k)

def middle_value_grid(epsilon: float, size: int) -> np.ndarray:
    """Returns the middle-bidder values of indices 1..size as a strictly increasing grid.

    Once eps 2^-k drops below one ulp, consecutive values round to the same double;
    each such value is moved to the next double above its predecessor. The shift is
    at most size ulps.
    """
    if int(size) != size or size < 1:
        raise InvalidParameters("the middle grid needs at least one index", "size")
    grid = np.array([value_of_index(epsilon, k) for k in range(1, int(size) + 1)])
    collisions = 0
    for k in range(1, len(grid)):
        if grid[k] <= grid[k - 1]:
            grid[k] = np.nextafter(grid[k - 1], np.inf)
            collisions += 1
    if collisions:
        logger.debug(f"Separated {collisions} middle values that coincide in floating point.")
    return grid

def equal_revenue_family(d: int, z: Scalar) -> EqualRevenueFamily:
    """Builds D_0..D_{m-1} with m = floor(d/z) - 1.

    A Fraction z keeps every entry an exact rational; any other z is evaluated in floats.
    """
    if int(d) != d or d < 4:
        raise InvalidParameters("d must be an integer of at least 4", "d")
    d = int(d)
    if not 1 < z < d:
        raise InvalidParameters("z must satisfy 1 < z < d", "z")
    m = math.floor(Fraction(d) / z) - 1 if isinstance(z, Fraction) else math.floor(d / z) - 1
    if m < 1:
        raise InvalidParameters(f"m = {m} leaves no distribution in the family", "m")

    if isinstance(z, Fraction):
        q = [(z - 1) * d / ((d - y) * (d - y - 1)) for y in range(m - 1)]
        qbar = [Fraction(1)]
        for q_y in q:
            qbar.append(qbar[-1] - q_y)
        family = EqualRevenueFamily(
            d=d, z=z, m=m,
            q=np.array(q, dtype=object),
            qbar=np.array(qbar, dtype=object),
            t=np.array([z / v for v in qbar], dtype=object)
        )
    else:
        z = float(z)
        y = np.arange(m - 1, dtype=float)
        q = (z - 1) * d / ((d - y) * (d - y - 1))
        qbar = 1 - np.concatenate(([0.0], np.cumsum(q)))
        family = EqualRevenueFamily(d=d, z=z, m=m, q=q, qbar=qbar, t=z / qbar)

    if not is_valid_family(family):
        raise InvalidParameters("probabilities of the family fall outside (0, 1)", "z")
    return family

def is_valid_family(family: EqualRevenueFamily) -> bool:
    """Returns true if every D_y is a probability distribution with increasing support."""
    q, qbar, t = family.q, family.qbar, family.t
    if family.exact:
        return (
            all(0 < v < 1 for v in q)
            and all(0 < v <= 1 for v in qbar)
            and all(a < b for a, b in zip(t, t[1:]))
        )
    return bool(
        np.all((q > 0) & (q < 1))
        and np.all((qbar > 0) & (qbar <= 1))
        and np.all(np.diff(t) > 0)
    )

def h_marginal(d: int, m: int, n_middle: int) -> np.ndarray:
    """Returns Pr[h = y] for y = 0..m-1.

    Every balanced index is uniform modulo d, so the law is 1/d below m-1 and
    (d - m + 1)/d at m-1, whatever epsilon and the truncation are.
    """
    if n_middle < 1:
        raise InvalidParameters("at least one middle bidder is required", "n_middle")
    if not 1 <= m <= d:
        raise InvalidParameters("m must satisfy 1 <= m <= d", "m")
    law = np.full(m, 1.0 / d)
    law[m - 1] = (d - m + 1) / d
    return law

def middle_levels(spec: BalancedSpec, m: int, n_middle: int) -> np.ndarray:
    """Returns h = min(sum of balanced indices mod d, m - 1) over the truncated middle grid."""
    size = spec.support_size
    axes = np.meshgrid(*([np.arange(1, size + 1)] * n_middle), indexing="ij")
    return np.minimum(sum(axes) % spec.d, m - 1)

def build_hard_instance(n: int, spec: BalancedSpec, z: Scalar, size_cap: int = INSTANCE_SIZE_CAP) -> HardInstance:
    """Builds the truncated instance H_n and its shrunken market H_{n-1}."""
    if int(n) != n or n < 3:
        raise InvalidParameters("the instance needs at least 3 bidders", "n")
    if spec.d < 4:
        raise InvalidParameters("d must be at least 4", "d")
    family = equal_revenue_family(spec.d, z).as_float()
    if family.m < 2:
        raise InvalidParameters(f"m = {family.m} makes bidder 1 deterministic", "m")

    n_middle = n - 2
    size = family.m * spec.support_size ** n_middle
    if size > size_cap:
        raise SizeCapExceeded(size, size_cap, "size")

    middle_grid = middle_value_grid(spec.epsilon, spec.support_size)

    truncated = truncated_balanced(spec)
    middle_mass = np.ones((spec.support_size,) * n_middle)
    for axis in range(n_middle):
        shape = [1] * n_middle
        shape[axis] = spec.support_size
        middle_mass = middle_mass * truncated.pmf.reshape(shape)
    levels = middle_levels(spec, family.m, n_middle)

    laws = np.vstack([family.law(y) for y in range(family.m)])
    dense_shrunk = np.moveaxis(laws[levels], -1, 0) * middle_mass[np.newaxis, ...]

    strong_grid = np.asarray(family.t, dtype=float)
    weak_grid = np.array([1 - 2 * spec.epsilon])
    grids_shrunk = [strong_grid] + [middle_grid] * n_middle
    joint_shrunk = JointDistribution.from_dense(grids_shrunk, dense_shrunk)
    joint_n = JointDistribution.from_dense(grids_shrunk + [weak_grid], dense_shrunk[..., np.newaxis])

    h_table: Dict[Profile, int] = {tuple(int(k) for k in idx): int(levels[idx]) for idx in np.ndindex(levels.shape)}
    trunc_error = 1 - (1 - spec.dropped_mass) ** n_middle
    if trunc_error > 0.5:
        logger.warning(f"Truncation drops {trunc_error:.4f} of the mass; consider a larger K.")
    logger.debug(f"Built H_{n} with d={spec.d}, m={family.m}, {len(joint_n.pmf)} support profiles.")

    return HardInstance(
        n=n, params=spec, family=family, joint_n=joint_n, joint_shrunk=joint_shrunk,
        h_table=h_table, trunc_error=trunc_error
    )

def conditional_law(inst: HardInstance, middle_idx: Tuple[int, ...]) -> np.ndarray:
    """Returns the law of bidder 1's grid index given the middle-bidder indices."""
    return inst.family.law(inst.h_of(middle_idx))
