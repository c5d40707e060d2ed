"""Mechanism tables: axiom checks, Myerson payments, revenue and the explicit mechanisms."""
from __future__ import annotations

import numpy as np

from typing import List, Optional, Sequence, Tuple

from shrinklab.constants import AXIOM_TOLERANCE
from shrinklab.cogs.models.distributions import HardInstance, JointDistribution
from shrinklab.cogs.models.exceptions import GridMismatch, NonMonotoneAllocation
from shrinklab.cogs.models.mechanism import Mechanism, ValidationReport, Witness
from shrinklab.cogs.utils.logger import get_logger

logger = get_logger("mechanisms")

def own_values(grids: Sequence[np.ndarray], bidder: int) -> np.ndarray:
    """Returns bidder's grid reshaped to broadcast along its own axis of the product grid."""
    shape = [1] * len(grids)
    shape[bidder] = len(grids[bidder])
    return np.asarray(grids[bidder], dtype=float).reshape(shape)

def _check_grids(mech: Mechanism, dist: JointDistribution) -> None:
    if not dist.same_grids(mech.grids):
        raise GridMismatch(field="grids")

def _insert(profile: Tuple[int, ...], bidder: int, own: int) -> Tuple[int, ...]:
    return profile[:bidder] + (own,) + profile[bidder:]

def validate_mechanism(mech: Mechanism, dist: JointDistribution, tolerance: float = AXIOM_TOLERANCE) -> ValidationReport:
    """Checks feasibility, monotonicity, IC over every ordered pair of own values, and ex-post IR."""
    _check_grids(mech, dist)
    # (check, violation, witness) per failing location, worst first within each check
    found: List[Tuple[str, float, Witness]] = []

    totals = mech.alloc.sum(axis=0) - 1
    bounds = np.maximum(-mech.alloc, mech.alloc - 1).max(axis=0)
    feasibility = np.maximum(totals, bounds)
    where = np.unravel_index(int(np.argmax(feasibility)), feasibility.shape)
    found.append(("feasible", float(feasibility[where]), Witness("feasible", -1, tuple(int(k) for k in where), None)))

    for check in ("monotone", "ic", "ex_post_ir"):
        worst = 0.0
        witness: Optional[Witness] = None
        for i, grid in enumerate(mech.grids):
            x = mech.alloc[i]
            p = mech.pay[i]
            if check == "monotone":
                if len(grid) < 2:
                    continue
                drop = -np.diff(x, axis=i)
                at = np.unravel_index(int(np.argmax(drop)), drop.shape)
                if drop[at] > worst or witness is None:
                    worst = max(worst, float(drop[at]))
                    witness = Witness(check, i, tuple(int(k) for k in at), int(at[i]) + 1)
            elif check == "ic":
                xs = np.moveaxis(x, i, -1)
                ps = np.moveaxis(p, i, -1)
                w = np.asarray(grid, dtype=float)
                # utility[..., a, b]: true value w_a, report w_b
                utility = xs[..., np.newaxis, :] * w[:, np.newaxis] - ps[..., np.newaxis, :]
                truthful = np.diagonal(utility, axis1=-2, axis2=-1)
                gain = utility - truthful[..., :, np.newaxis]
                at = np.unravel_index(int(np.argmax(gain)), gain.shape)
                if gain[at] > worst or witness is None:
                    worst = max(worst, float(gain[at]))
                    others = tuple(int(k) for k in at[:-2])
                    witness = Witness(check, i, _insert(others, i, int(at[-2])), int(at[-1]))
            else:
                excess = np.maximum(p - x * own_values(mech.grids, i), -p)
                at = np.unravel_index(int(np.argmax(excess)), excess.shape)
                if excess[at] > worst or witness is None:
                    worst = max(worst, float(excess[at]))
                    witness = Witness(check, i, tuple(int(k) for k in at), None)
        if witness is not None:
            found.append((check, worst, witness))

    violations = {check: value for check, value, _ in found}
    failing = [(value, witness) for check, value, witness in found if value > tolerance]
    worst_violation = max([0.0] + [value for value in violations.values()])
    witness = max(failing, key=lambda item: item[0])[1] if failing else None
    return ValidationReport(
        feasible=violations.get("feasible", 0.0) <= tolerance,
        monotone=violations.get("monotone", 0.0) <= tolerance,
        ic=violations.get("ic", 0.0) <= tolerance,
        ex_post_ir=violations.get("ex_post_ir", 0.0) <= tolerance,
        worst_violation=max(0.0, worst_violation),
        witness=witness
    )

def is_monotone(alloc: np.ndarray, tolerance: float = AXIOM_TOLERANCE) -> bool:
    """Returns true if every bidder's allocation is nondecreasing in its own value."""
    for i in range(alloc.shape[0]):
        if alloc.shape[i + 1] > 1 and np.any(np.diff(alloc[i], axis=i) < -tolerance):
            return False
    return True

def myerson_payments(alloc: np.ndarray, grids: Sequence[np.ndarray], tolerance: float = AXIOM_TOLERANCE) -> np.ndarray:
    """Returns the threshold payments of a monotone allocation.

    On own grid w_1 < ... < w_L, p(w_j) = w_j x(w_j) - sum_{l<j} x(w_l) (w_{l+1} - w_l).
    These are the largest payments that keep the mechanism IC and IR.
    """
    pay = np.zeros(alloc.shape)
    for i, grid in enumerate(grids):
        w = np.asarray(grid, dtype=float)
        x = np.moveaxis(alloc[i], i, -1).astype(float)
        if len(w) > 1 and np.any(np.diff(x, axis=-1) < -tolerance):
            raise NonMonotoneAllocation(f"allocation of bidder {i} decreases in its own value", f"alloc[{i}]")
        below = np.zeros(x.shape)
        if len(w) > 1:
            below[..., 1:] = np.cumsum(x[..., :-1] * np.diff(w), axis=-1)
        pay[i] = np.moveaxis(np.maximum(x * w - below, 0.0), -1, i)
    return pay

def expected_revenue(mech: Mechanism, dist: JointDistribution) -> float:
    """Returns the support-weighted sum of payments."""
    _check_grids(mech, dist)
    return float(np.sum(mech.pay.sum(axis=0) * dist.dense))

def with_myerson_payments(grids: Sequence[np.ndarray], alloc: np.ndarray) -> Mechanism:
    """Completes an allocation table to a mechanism with threshold payments."""
    arrays = tuple(np.asarray(g, dtype=float) for g in grids)
    return Mechanism(len(arrays), arrays, alloc, myerson_payments(alloc, arrays))

def posted_price_mechanism(grids: Sequence[np.ndarray], bidder: int, price_index: int) -> Mechanism:
    """Offers one bidder the item at a fixed grid price, whatever the others report."""
    arrays = tuple(np.asarray(g, dtype=float) for g in grids)
    shape = tuple(len(g) for g in arrays)
    alloc = np.zeros((len(arrays),) + shape)
    own = np.arange(shape[bidder]).reshape([-1 if k == bidder else 1 for k in range(len(shape))])
    alloc[bidder] = np.broadcast_to(own >= price_index, shape)
    return with_myerson_payments(arrays, alloc)

def _strong_indices(inst: HardInstance, extra_axes: int) -> np.ndarray:
    return np.arange(inst.family.m).reshape((inst.family.m,) + (1,) * (inst.n_middle + extra_axes))

def explicit_shrunken_mechanism(inst: HardInstance) -> Mechanism:
    """Offers bidder 1 the item at t_{h(v_-1)} and never allocates to anyone else."""
    grids = inst.joint_shrunk.grids
    levels = inst.levels[np.newaxis, ...]
    alloc = np.zeros((inst.n - 1,) + inst.joint_shrunk.shape)
    pay = np.zeros_like(alloc)
    wins = _strong_indices(inst, 0) >= levels
    alloc[0] = wins
    pay[0] = wins * np.asarray(inst.family.t)[levels]
    return Mechanism(inst.n - 1, grids, alloc, pay)

def explicit_full_mechanism(inst: HardInstance) -> Mechanism:
    """Offers bidder 1 the item at t_{h(v_-1)}; when bidder 1 declines, sells to the weak bidder at 1 - 2 eps."""
    grids = inst.joint_n.grids
    levels = inst.levels[np.newaxis, ..., np.newaxis]
    alloc = np.zeros((inst.n,) + inst.joint_n.shape)
    pay = np.zeros_like(alloc)
    wins = np.broadcast_to(_strong_indices(inst, 1) >= levels, inst.joint_n.shape)
    # The weak bidder's grid is the single value 1 - 2 eps, so it always accepts
    alloc[0] = wins
    pay[0] = wins * np.asarray(inst.family.t)[levels]
    alloc[inst.n - 1] = ~wins
    pay[inst.n - 1] = (~wins) * inst.weak_value
    return Mechanism(inst.n, grids, alloc, pay)

def lookahead_mechanism(dist: JointDistribution) -> Mechanism:
    """Sells only to the highest bidder, at its conditional monopoly price given the others.

    Ties in value go to the lowest bidder index, ties in revenue to the lowest price.
    """
    grids = dist.grids
    shape = dist.shape
    dense = dist.dense
    alloc = np.zeros((dist.n_bidders,) + shape)
    for i, grid in enumerate(grids):
        w = np.asarray(grid, dtype=float)
        others = shape[:i] + shape[i + 1:]
        for opposing in np.ndindex(*others):
            values = [float(grids[k][opposing[k if k < i else k - 1]]) for k in range(dist.n_bidders) if k != i]
            below = [v for k, v in enumerate(values) if k < i]
            above = [v for k, v in enumerate(values) if k >= i]
            top = (w > max(below, default=-np.inf)) & (w >= max(above, default=-np.inf))
            if not top.any():
                continue
            first = int(np.argmax(top))
            line = dense[opposing[:i] + (slice(None),) + opposing[i:]]
            tails = np.cumsum(line[::-1])[::-1]
            revenue = w[first:] * tails[first:]
            best = float(revenue.max())
            if best <= 0:
                continue
            price = first + int(np.flatnonzero(revenue >= best - 1e-12 * max(1.0, best))[0])
            target = list(opposing[:i]) + [slice(price, None)] + list(opposing[i:])
            alloc[(i,) + tuple(target)] = 1.0
    logger.debug(f"Lookahead mechanism allocates at {int((alloc.sum(axis=0) > 0).sum())} profiles.")
    return with_myerson_payments(grids, alloc)

def is_high_priced(mech: Mechanism, inst: HardInstance, tolerance: float = AXIOM_TOLERANCE) -> bool:
    """Returns true if bidder 1 is allocated on support only when v_1 >= t_{h(v_-1)}."""
    if not inst.joint_shrunk.same_grids(mech.grids):
        raise GridMismatch("high-priced checks need a mechanism over the shrunken market", "grids")
    below_offer = _strong_indices(inst, 0) < inst.levels[np.newaxis, ...]
    return not np.any(inst.shrunk_support & below_offer & (mech.alloc[0] > tolerance))
