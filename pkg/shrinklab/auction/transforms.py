"""Revenue-preserving rewrites of mechanisms on the shrunken market."""
from __future__ import annotations

import numpy as np

from typing import Dict, List, Optional, Set, Tuple

from shrinklab.constants import AXIOM_TOLERANCE
from shrinklab.auction.mechanisms import is_high_priced, is_monotone, myerson_payments
from shrinklab.cogs.models.distributions import HardInstance
from shrinklab.cogs.models.exceptions import (
    GridMismatch, NonMonotoneAllocation, NotHighPriced, SurplusViolation, TransformDidNotTerminate
)
from shrinklab.cogs.models.mechanism import FixRecord, Mechanism, ShiftContext, ShiftReport
from shrinklab.cogs.utils.aliases import Profile
from shrinklab.cogs.utils.logger import get_logger

logger = get_logger("transforms")

def _require_shrunk(mech: Mechanism, inst: HardInstance) -> None:
    if not inst.joint_shrunk.same_grids(mech.grids):
        raise GridMismatch("transforms need a mechanism over the shrunken market", "grids")
    if not is_monotone(mech.alloc):
        raise NonMonotoneAllocation(field="alloc")

def _strong(inst: HardInstance) -> np.ndarray:
    return np.arange(inst.family.m).reshape((inst.family.m,) + (1,) * inst.n_middle)

def high_priced_transform(mech: Mechanism, inst: HardInstance) -> Mechanism:
    """Makes bidder 1's offer the price t_{h(v_-1)}.

    Bidder 1 receives x_1(t_h, v_-1) at price t_h whenever v_1 >= t_h and nothing
    below; every other bidder is left untouched.
    """
    _require_shrunk(mech, inst)
    levels = inst.levels[np.newaxis, ...]
    at_offer = np.take_along_axis(mech.alloc[0], levels, axis=0)
    accepts = _strong(inst) >= levels
    alloc = mech.alloc.astype(float).copy()
    pay = mech.pay.astype(float).copy()
    alloc[0] = np.where(accepts, at_offer, 0.0)
    pay[0] = alloc[0] * np.asarray(inst.family.t)[levels]
    return Mechanism(mech.n_bidders, mech.grids, alloc, pay)

def _problematic(alloc: np.ndarray, inst: HardInstance, tolerance: float) -> np.ndarray:
    middle = alloc[1:].max(axis=0) > tolerance
    return inst.shrunk_support & (_strong(inst) == inst.levels[np.newaxis, ...]) & middle

def _preprocess(alloc: np.ndarray, support: np.ndarray, tolerance: float) -> None:
    """Zeroes off-support allocations with no positive on-support allocation below them on their line."""
    for i in range(alloc.shape[0]):
        positive = alloc[i] > tolerance
        seen = np.logical_or.accumulate(support & positive, axis=i)
        below = np.zeros_like(seen)
        dst = [slice(None)] * seen.ndim
        src = [slice(None)] * seen.ndim
        dst[i] = slice(1, None)
        src[i] = slice(None, -1)
        below[tuple(dst)] = seen[tuple(src)]
        alloc[i][~support & positive & ~below] = 0.0

def _line(bidder: int, level: int, middle: Profile, stop: int) -> tuple:
    """Returns an index selecting bidder's own values 0..stop-1 at the given level and opposing middle values."""
    k = bidder - 1
    return (bidder, level) + middle[:k] + (slice(0, stop),) + middle[k + 1:]

def _admissible(alloc: np.ndarray, y: int, middle: Profile, m: int, tolerance: float) -> bool:
    """Returns true if the middle bidders can be cleared above v' without breaking monotonicity."""
    for j in range(y + 1, m):
        for i in range(1, alloc.shape[0]):
            if alloc[(i, j) + middle] <= tolerance:
                continue
            if np.any(alloc[_line(i, j, middle, middle[i - 1])] > tolerance):
                return False
    return True

def _plan_fix(alloc: np.ndarray, inst: HardInstance, y: int, middle: Profile, tolerance: float) -> FixRecord:
    """Collects the neighbourhood of v' = (t_y, middle) and the surplus comparison for every allocated bidder."""
    dense = inst.joint_shrunk.dense
    grid = inst.joint_shrunk.grids[1]
    t_y = float(inst.family.t[y])
    d = inst.params.d
    v_prime = (y,) + middle
    bidders = tuple(i for i in range(1, alloc.shape[0]) if alloc[(i,) + v_prime] > tolerance)

    G_i: Dict[int, Tuple[Profile, ...]] = {}
    s_ladder: Dict[int, Tuple[float, ...]] = {}
    gain: Dict[int, float] = {}
    loss: Dict[int, float] = {}
    for i in bidders:
        own = middle[i - 1]
        G_i[i] = tuple((y,) + middle[:i - 1] + (s,) + middle[i:] for s in range(own, -1, -1))
        s_ladder[i] = tuple(float(grid[s]) for s in range(own, max(own - d, 0) - 1, -1))
        value = float(grid[own])
        gain[i] = float(dense[v_prime]) * (t_y - value)
        loss[i] = sum(
            float(dense[s]) * value for s in G_i[i][1:]
            if dense[s] > 0 and alloc[(i,) + s] > tolerance
        )
    G_1 = tuple((j,) + middle for j in range(y + 1, inst.family.m))
    context = ShiftContext(v_prime=v_prime, I=bidders, y=y, G_i=G_i, G_1=G_1, s_ladder=s_ladder)
    shifted = float(sum(alloc[(i,) + v_prime] for i in bidders))
    return FixRecord(context=context, shifted=shifted, gain=gain, loss=loss)

def _apply_fix(alloc: np.ndarray, fix: FixRecord) -> None:
    y, middle = fix.context.y, fix.context.v_prime[1:]
    for i in fix.context.I:
        alloc[_line(i, y, middle, middle[i - 1] + 1)] = 0.0
    strong = min(1.0, float(alloc[(0,) + fix.context.v_prime]) + fix.shifted)
    alloc[(0,) + fix.context.v_prime] = strong
    for g in fix.context.G_1:
        alloc[(0,) + g] = max(float(alloc[(0,) + g]), strong)
        alloc[(slice(1, None),) + g] = 0.0

def _above_blocked(blocked: Set[Profile], y: int, middle: Profile, bidder: int) -> bool:
    """Returns true if a blocked fix sits below middle on bidder's own line at level y."""
    k = bidder - 1
    return any((y,) + middle[:k] + (s,) + middle[k + 1:] in blocked for s in range(middle[k]))

def _next_fix(
    alloc: np.ndarray, inst: HardInstance, y: int, blocked: List[Profile], tolerance: float
) -> Optional[FixRecord]:
    """Returns the fix of the lexicographically smallest problematic middle profile at level y that can be fixed.

    A profile is blocked when clearing its G_1 step would break monotonicity, or when
    it lies above a blocked profile on a bidder's line and the surplus does not cover
    the longer stretch it would clear.
    """
    seen = set(blocked)
    at_level = (inst.levels == y) & (alloc[1:, y].max(axis=0) > tolerance)
    for found in np.argwhere(at_level):
        middle = tuple(int(k) for k in found)
        if (y,) + middle in seen:
            continue
        if not _admissible(alloc, y, middle, inst.family.m, tolerance):
            blocked.append((y,) + middle)
            seen.add((y,) + middle)
            logger.warning(f"Shift fix at level {y}, profile {list(middle)} is blocked by the truncation boundary.")
            continue
        fix = _plan_fix(alloc, inst, y, middle, tolerance)
        short = [i for i in fix.context.I if fix.gain[i] <= fix.loss[i]]
        if short and all(_above_blocked(seen, y, middle, i) for i in short):
            blocked.append((y,) + middle)
            seen.add((y,) + middle)
            logger.warning(f"Shift fix at level {y}, profile {list(middle)} sits above a blocked fix and does not pay for itself.")
            continue
        if short:
            i = short[0]
            raise SurplusViolation(
                f"gain {fix.gain[i]!r} does not exceed loss {fix.loss[i]!r} for bidder {i}", f"profile {[y, *middle]}"
            )
        return fix
    return None

def unreachable_profiles(inst: HardInstance, blocked: List[Profile]) -> np.ndarray:
    """Marks the allocations of the middle bidders that no shift fix can clear.

    Entry [k, j, middle] concerns bidder k + 1 at strong index j. A fix clears that
    bidder at middle when it is applied at the first profile above middle, along the
    bidder's own axis and at the same strong index, where h equals j. The entry is
    true if that profile lies past the truncated grid or its fix was blocked.
    """
    levels = inst.levels
    blocked_set = set(blocked)
    size = inst.params.support_size
    unreachable = np.zeros((inst.n_middle, inst.family.m) + levels.shape, dtype=bool)
    for k in range(inst.n_middle):
        moved = np.moveaxis(levels, k, -1)
        for rest in np.ndindex(*moved.shape[:-1]):
            line = moved[rest]
            for j in range(inst.family.m):
                beyond = True
                for s in range(size - 1, -1, -1):
                    middle = rest[:k] + (s,) + rest[k:]
                    if line[s] == j:
                        beyond = (j,) + middle in blocked_set
                    unreachable[(k, j) + middle] = beyond
    return unreachable

def shift_report(mech: Mechanism, inst: HardInstance, tolerance: float = AXIOM_TOLERANCE) -> ShiftReport:
    """Moves every problematic allocation of the middle bidders onto bidder 1.

    Levels are processed from m-1 down to 0 and, within a level, problematic profiles
    in lexicographic order. Fixes that the truncation boundary makes unsafe are
    skipped and listed in the report. On the truncated grid the middle bidders may keep
    on-support allocation only where `unreachable_profiles` says no fix reaches;
    anything kept elsewhere is reported as `stray`.
    """
    _require_shrunk(mech, inst)
    if not is_high_priced(mech, inst, tolerance):
        raise NotHighPriced(field="alloc")

    support = inst.shrunk_support
    alloc = mech.alloc.astype(float).copy()
    fixes: List[FixRecord] = []
    blocked: List[Profile] = []
    if _problematic(alloc, inst, tolerance).any():
        limit = int(support.sum())
        for y in range(inst.family.m - 1, -1, -1):
            while True:
                _preprocess(alloc, support, tolerance)
                fix = _next_fix(alloc, inst, y, blocked, tolerance)
                if fix is None:
                    break
                if len(fixes) >= limit:
                    raise TransformDidNotTerminate(field="fixes")
                _apply_fix(alloc, fix)
                fixes.append(fix)
        np.clip(alloc, 0.0, 1.0, out=alloc)
        output = Mechanism(mech.n_bidders, mech.grids, alloc, myerson_payments(alloc, mech.grids, tolerance))
    else:
        output = mech.replace()

    unreachable = unreachable_profiles(inst, blocked)
    kept = output.alloc[1:] * support[np.newaxis, ...]
    residual = float(np.sum(kept))
    stray = float(np.sum(kept[~unreachable]))
    if stray > tolerance:
        logger.error(f"Middle bidders keep {stray:.3g} of on-support allocation that a fix should have cleared.")
    if fixes or blocked:
        logger.info(f"Shift transform applied {len(fixes)} fixes, {len(blocked)} blocked, residual {residual:.3g}.")
    return ShiftReport(
        mechanism=output, fixes=fixes, blocked=blocked, residual=residual, unreachable=unreachable, stray=stray
    )

def shift_transform(mech: Mechanism, inst: HardInstance) -> Mechanism:
    """Returns a high-priced mechanism in which bidders 2..n-1 keep no on-support allocation a fix can reach."""
    return shift_report(mech, inst).mechanism
