from __future__ import annotations

import math
import numpy as np

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Sequence, Tuple

from shrinklab.constants import PROBABILITY_TOLERANCE
from shrinklab.cogs.models.exceptions import InvalidParameters, SchemaError
from shrinklab.cogs.utils.aliases import Profile, Scalar


@dataclass(frozen=True)
class BalancedSpec:
    """Parameters of an (epsilon, d)-balanced law truncated to K blocks."""

    epsilon: float
    d: int
    trunc_blocks: int

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InvalidParameters("epsilon must lie strictly between 0 and 1", "epsilon")
        if int(self.d) != self.d or self.d < 1:
            raise InvalidParameters("block length must be a positive integer", "d")
        if int(self.trunc_blocks) != self.trunc_blocks or self.trunc_blocks < 1:
            raise InvalidParameters("number of retained blocks must be a positive integer", "K")

    @property
    def K(self) -> int:
        return self.trunc_blocks

    @property
    def support_size(self) -> int:
        """Returns the number of retained indices, K * d."""
        return self.trunc_blocks * self.d

    @property
    def dropped_mass(self) -> float:
        """Returns the probability mass discarded by truncation, (1 - epsilon)^K."""
        return (1 - self.epsilon) ** self.trunc_blocks


@dataclass(frozen=True, eq=False)
class EqualRevenueFamily:
    """The distributions D_0..D_{m-1}.

    D_y puts mass q_j on t_j for every j < y and the remaining mass qbar_y on t_y.
    Every support point of every D_y earns the same revenue z when posted as a price.
    Arrays hold floats, or Fractions when the family was built from a rational z.
    """

    d: int
    z: Scalar
    m: int
    q: np.ndarray
    qbar: np.ndarray
    t: np.ndarray

    @property
    def exact(self) -> bool:
        """Returns true if the family was computed in exact rational arithmetic."""
        return isinstance(self.z, Fraction)

    def law(self, y: int) -> np.ndarray:
        """Returns the pmf of D_y over the values t_0..t_{m-1}."""
        if not 0 <= y < self.m:
            raise InvalidParameters(f"level {y} is outside 0..{self.m - 1}", "y")
        pmf = np.zeros(self.m, dtype=self.q.dtype)
        pmf[:y] = self.q[:y]
        pmf[y] = self.qbar[y]
        return pmf

    def support(self, y: int) -> List[Scalar]:
        """Returns the support of D_y."""
        return list(self.t[:y + 1])

    def as_float(self) -> EqualRevenueFamily:
        """Returns a floating point copy of the family."""
        if not self.exact:
            return self
        return EqualRevenueFamily(
            d=self.d, z=float(self.z), m=self.m,
            q=self.q.astype(float), qbar=self.qbar.astype(float), t=self.t.astype(float)
        )


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """A finite correlated value distribution.

    Grids are per-bidder strictly increasing value arrays; the pmf maps one grid
    index per bidder to a probability mass.
    """

    n_bidders: int
    grids: Tuple[np.ndarray, ...]
    pmf: Dict[Profile, float] = field(repr=False)

    def __post_init__(self):
        if self.n_bidders != len(self.grids) or self.n_bidders < 1:
            raise SchemaError("number of grids must equal the number of bidders", "grids")
        for i, grid in enumerate(self.grids):
            if grid.ndim != 1 or len(grid) == 0:
                raise SchemaError(f"grid of bidder {i} must be a nonempty list", "grids")
            if np.any(np.diff(grid) <= 0):
                raise SchemaError(f"grid of bidder {i} is not strictly increasing", "grids")
        shape = self.shape
        for idx, mass in self.pmf.items():
            if len(idx) != self.n_bidders or any(not 0 <= k < n for k, n in zip(idx, shape)):
                raise SchemaError(f"profile {list(idx)} is outside the grids", "pmf")
            if mass < 0:
                raise SchemaError(f"profile {list(idx)} has negative mass", "pmf")
        total = math.fsum(self.pmf.values())
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise SchemaError(f"masses sum to {total!r} instead of 1", "pmf")

    @classmethod
    def from_dense(cls, grids: Sequence[Sequence[float]], dense: np.ndarray) -> JointDistribution:
        """Builds a distribution from a dense probability array over the product grid."""
        arrays = tuple(np.asarray(g, dtype=float) for g in grids)
        pmf = {tuple(int(k) for k in idx): float(dense[idx]) for idx in zip(*np.nonzero(dense))}
        return cls(len(arrays), arrays, pmf)

    @property
    def shape(self) -> Tuple[int, ...]:
        """Returns the shape of the full product grid."""
        return tuple(len(g) for g in self.grids)

    @property
    def profile_count(self) -> int:
        """Returns the number of profiles in the full product grid."""
        return int(np.prod(self.shape))

    @cached_property
    def dense(self) -> np.ndarray:
        """Returns the pmf as a dense array over the full product grid."""
        table = np.zeros(self.shape)
        for idx, mass in self.pmf.items():
            table[idx] = mass
        return table

    @cached_property
    def support_mask(self) -> np.ndarray:
        """Returns a boolean array marking profiles of positive mass."""
        return self.dense > 0

    def values(self, idx: Profile) -> Tuple[float, ...]:
        """Returns the value profile of a grid index tuple."""
        return tuple(float(self.grids[i][k]) for i, k in enumerate(idx))

    def marginalize(self, bidder: int) -> JointDistribution:
        """Returns the joint law of every bidder except the given one."""
        if not 0 <= bidder < self.n_bidders or self.n_bidders == 1:
            raise InvalidParameters(f"cannot remove bidder {bidder}", "bidder")
        pmf: Dict[Profile, float] = {}
        for idx, mass in self.pmf.items():
            key = idx[:bidder] + idx[bidder + 1:]
            pmf[key] = pmf.get(key, 0.0) + mass
        grids = self.grids[:bidder] + self.grids[bidder + 1:]
        return JointDistribution(self.n_bidders - 1, grids, pmf)

    def same_grids(self, grids: Sequence[np.ndarray]) -> bool:
        """Returns true if the given grids equal this distribution's grids."""
        if len(grids) != self.n_bidders:
            return False
        return all(len(a) == len(b) and np.allclose(a, b, rtol=0, atol=1e-12) for a, b in zip(grids, self.grids))


@dataclass(frozen=True, eq=False)
class HardInstance:
    """A truncated market-shrinkage instance.

    Bidder 0 is the strong bidder with values t_0..t_{m-1}, bidders 1..n-2 are the
    middle bidders with balanced indices, and bidder n-1 is the weak bidder whose
    only value is 1 - 2 epsilon. joint_shrunk drops the weak bidder.
    """

    n: int
    params: BalancedSpec
    family: EqualRevenueFamily
    joint_n: JointDistribution
    joint_shrunk: JointDistribution
    h_table: Dict[Profile, int] = field(repr=False)
    trunc_error: float

    @property
    def n_middle(self) -> int:
        return self.n - 2

    @property
    def weak_value(self) -> float:
        return 1 - 2 * self.params.epsilon

    @property
    def middle_shape(self) -> Tuple[int, ...]:
        return (self.params.support_size,) * self.n_middle

    def h_of(self, middle_idx: Profile) -> int:
        """Returns h for a tuple of zero-based middle-bidder grid indices."""
        return self.h_table[tuple(middle_idx)]

    @cached_property
    def levels(self) -> np.ndarray:
        """Returns h over the middle grid as an integer array."""
        table = np.zeros(self.middle_shape, dtype=int)
        for idx, level in self.h_table.items():
            table[idx] = level
        return table

    @cached_property
    def shrunk_support(self) -> np.ndarray:
        """Returns the support mask of the shrunken market: profiles with v_1 at most t_h."""
        strong = np.arange(self.family.m).reshape((self.family.m,) + (1,) * self.n_middle)
        return strong <= self.levels[np.newaxis, ...]

    def is_weak_bidder_dominated(self) -> bool:
        """Returns true if the weak bidder's value is strictly below every other support value."""
        weak = self.weak_value
        return all(float(np.min(grid)) > weak for grid in self.joint_n.grids[:-1])
