from __future__ import annotations

import numpy as np

from dataclasses import dataclass
from typing import NamedTuple, Optional

from shrinklab.cogs.models.exceptions import InvalidParameters

@dataclass
class GapReport:
    """One row of the revenue-gap sweep. K is None for purely analytic rows."""

    d: int
    epsilon: float
    K: Optional[int]
    rev_shrunk: float
    rev_full: float
    ratio: float
    bound_formula: float
    limit_gap: float

    # Filled in only when the sweep cross-checks against the LP
    lp_rev_shrunk: Optional[float] = None
    lp_rev_full: Optional[float] = None
    lp_rev_lookahead: Optional[float] = None
    lp_ratio: Optional[float] = None
    explicit_rev_full: Optional[float] = None
    trunc_error: Optional[float] = None


class LemmaCheck(NamedTuple):
    d: int
    item: int
    passed: bool
    worst_error: float
    description: str


class HarmonicBounds(NamedTuple):
    lower: float
    upper: float
    total: float


class MonteCarloEstimate(NamedTuple):
    estimate: float
    std_error: float
    samples: int = 0


@dataclass(frozen=True)
class RngSeed:
    """A 64-bit seed. Identical seeds give identical sample streams."""

    seed: int

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParameters("seed must be a 64-bit unsigned integer", "seed")

    def generator(self, *stream: int) -> np.random.Generator:
        """Returns a generator for the given sub-stream, such as a sweep row index."""
        if not stream:
            return np.random.default_rng(self.seed)
        return np.random.default_rng([self.seed, *stream])
