from __future__ import annotations

import numpy as np

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from shrinklab.cogs.models.exceptions import SchemaError
from shrinklab.cogs.utils.aliases import Profile


@dataclass(frozen=True, eq=False)
class Mechanism:
    """This class represents a truthful-in-expectation mechanism as dense tables.

    alloc[i][v] is bidder i's allocation probability at profile v and pay[i][v] is
    bidder i's expected payment there. Both tables cover the full product grid,
    including profiles outside the support of any distribution.
    """

    n_bidders: int
    grids: Tuple[np.ndarray, ...]
    alloc: np.ndarray = field(repr=False)
    pay: np.ndarray = field(repr=False)

    def __post_init__(self):
        expected = (self.n_bidders,) + tuple(len(g) for g in self.grids)
        if len(self.grids) != self.n_bidders:
            raise SchemaError("number of grids must equal the number of bidders", "grids")
        if self.alloc.shape != expected:
            raise SchemaError(f"allocation table has shape {self.alloc.shape}, expected {expected}", "alloc")
        if self.pay.shape != expected:
            raise SchemaError(f"payment table has shape {self.pay.shape}, expected {expected}", "pay")

    @classmethod
    def zero(cls, grids: Sequence[Sequence[float]]) -> Mechanism:
        """Returns the mechanism that never allocates and never charges."""
        arrays = tuple(np.asarray(g, dtype=float) for g in grids)
        shape = (len(arrays),) + tuple(len(g) for g in arrays)
        return cls(len(arrays), arrays, np.zeros(shape), np.zeros(shape))

    @property
    def shape(self) -> Tuple[int, ...]:
        """Returns the shape of the full product grid."""
        return tuple(len(g) for g in self.grids)

    def replace(self, alloc: Optional[np.ndarray] = None, pay: Optional[np.ndarray] = None) -> Mechanism:
        """Returns a copy with the given tables swapped in."""
        return Mechanism(
            self.n_bidders, self.grids,
            self.alloc.copy() if alloc is None else alloc,
            self.pay.copy() if pay is None else pay
        )


class Witness(NamedTuple):
    """The location of the worst axiom violation."""
    check: str
    bidder: int
    profile: Profile
    deviation: Optional[int]


class ValidationReport(NamedTuple):
    feasible: bool
    monotone: bool
    ic: bool
    ex_post_ir: bool
    worst_violation: float
    witness: Optional[Witness]

    @property
    def ok(self) -> bool:
        """Returns true if every axiom holds."""
        return self.feasible and self.monotone and self.ic and self.ex_post_ir

    def to_dict(self) -> dict:
        """Returns the report as a fixed-key dictionary."""
        witness = None
        if self.witness is not None:
            witness = {
                "check": self.witness.check,
                "bidder": self.witness.bidder,
                "profile": list(self.witness.profile),
                "deviation": self.witness.deviation
            }
        return {
            "feasible": self.feasible,
            "monotone": self.monotone,
            "ic": self.ic,
            "ex_post_ir": self.ex_post_ir,
            "worst_violation": self.worst_violation,
            "witness": witness
        }


@dataclass(frozen=True)
class ShiftContext:
    """The neighbourhood of one minimal problematic profile.

    Bidder indices are zero-based mechanism indices, so the middle bidders are 1..n-2.
    """

    v_prime: Profile
    I: Tuple[int, ...]
    y: int
    G_i: Dict[int, Tuple[Profile, ...]]
    G_1: Tuple[Profile, ...]
    s_ladder: Dict[int, Tuple[float, ...]]


@dataclass(frozen=True)
class FixRecord:
    """One applied fix: the shifted mass and the per-bidder surplus comparison."""

    context: ShiftContext
    shifted: float
    gain: Dict[int, float]
    loss: Dict[int, float]


@dataclass(frozen=True, eq=False)
class ShiftReport:
    """The outcome of a shift transform.

    `residual` is the on-support allocation the middle bidders keep. `unreachable`
    marks, per middle bidder, the profiles whose clearing fix lies past the end of the
    truncated grid or was blocked; `stray` is the residual outside that region.
    """

    mechanism: Mechanism
    fixes: List[FixRecord]
    blocked: List[Profile]
    residual: float
    unreachable: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, dtype=bool))
    stray: float = 0.0

    @property
    def fix_count(self) -> int:
        return len(self.fixes)
