"""Optimal and k-lookahead revenue through a linear program, plus a deterministic brute-force oracle."""
from __future__ import annotations

import numpy as np

from typing import Dict, List, Literal, Optional, Tuple

from shrinklab.constants import (
    LP_SIZE_CAP, ORACLE_MAX_GRID, ORACLE_MAX_PROFILES, ORACLE_NODE_BUDGET
)
from shrinklab.auction.mechanisms import myerson_payments
from shrinklab.auction.simplex import simplex_solve
from shrinklab.cogs.models.distributions import JointDistribution
from shrinklab.cogs.models.exceptions import InvalidParameters, SizeCapExceeded
from shrinklab.cogs.models.mechanism import Mechanism
from shrinklab.cogs.models.program import LinearProgram, LpSolution, WinnerRestriction
from shrinklab.cogs.utils.logger import get_logger

logger = get_logger("optimal")

IcPairs = Literal["threshold", "adjacent", "all"]

IC_PAIR_MODES = ("threshold", "adjacent", "all")

class VariableIndex:
    """Maps (bidder, flat profile) to LP columns: allocations first, then payments if present."""

    def __init__(self, n_bidders: int, profiles: int, payments: bool = True):
        self.n_bidders = n_bidders
        self.profiles = profiles
        self.payments = payments

    @property
    def count(self) -> int:
        return (2 if self.payments else 1) * self.n_bidders * self.profiles

    def x(self, bidder: int, flat: int) -> int:
        return bidder * self.profiles + flat

    def p(self, bidder: int, flat: int) -> int:
        if not self.payments:
            raise InvalidParameters("the threshold program has no payment columns", "ic_pairs")
        return (self.n_bidders + bidder) * self.profiles + flat


def _pairs(length: int, ic_pairs: IcPairs) -> List[Tuple[int, int]]:
    if ic_pairs == "adjacent":
        return [pair for a in range(length - 1) for pair in ((a, a + 1), (a + 1, a))]
    return [(a, b) for a in range(length) for b in range(length) if a != b]

def threshold_coefficients(grid: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """Returns the revenue per unit of allocation along one line under threshold payments.

    With p_a = w_a x_a - sum_{j<a} (w_{j+1} - w_j) x_j the line earns
    sum_a x_a (w_a q_a - (w_{a+1} - w_a) Pr[above a]).
    """
    grid = np.asarray(grid, dtype=float)
    above = np.append(np.cumsum(masses[::-1])[::-1][1:], 0.0)
    gaps = np.append(np.diff(grid), 0.0)
    return grid * masses - gaps * above

def build_lp(
    dist: JointDistribution,
    restrict: Optional[WinnerRestriction] = None,
    ic_pairs: IcPairs = "adjacent",
    size_cap: int = LP_SIZE_CAP
) -> LinearProgram:
    """Builds the revenue-maximization program over the full product grid.

    With ic_pairs="adjacent" or "all" the variables are x_i(v) and p_i(v) for every
    bidder and every profile, whether or not the profile is in the support. Rows are
    feasibility, IC between own values on every line and ex-post IR. "adjacent" only
    compares neighbouring grid values, which for single-parameter bidders is
    equivalent to all pairs.

    With ic_pairs="threshold" payments are eliminated: every line charges threshold
    payments, so the variables are x_i(v) alone and IC reduces to x being
    nondecreasing along each bidder's own axis. The optimum is the same, and the
    rows keep unit coefficients however close two grid values are.
    """
    if ic_pairs not in IC_PAIR_MODES:
        raise InvalidParameters(f"unknown IC pair mode {ic_pairs}", "ic_pairs")
    restrict = restrict or WinnerRestriction.everyone()
    n = dist.n_bidders
    if restrict.mode == "top_k" and restrict.k > n:
        raise InvalidParameters(f"k = {restrict.k} exceeds the {n} bidders", "k")
    shape = dist.shape
    profiles = dist.profile_count
    if profiles * n > size_cap:
        raise SizeCapExceeded(profiles * n, size_cap, "profiles")

    explicit = ic_pairs != "threshold"
    index = VariableIndex(n, profiles, payments=explicit)
    dense = dist.dense
    flat_of = np.arange(profiles).reshape(shape)
    objective = np.zeros(index.count)
    if explicit:
        for i in range(n):
            objective[index.p(i, 0):index.p(i, 0) + profiles] = dense.reshape(-1)
    else:
        for i, grid in enumerate(dist.grids):
            lines = np.moveaxis(flat_of, i, -1).reshape(-1, len(grid))
            masses = np.moveaxis(dense, i, -1).reshape(-1, len(grid))
            for line, mass in zip(lines, masses):
                objective[[index.x(i, f) for f in line]] = threshold_coefficients(grid, mass)
    lp = LinearProgram(index.count, objective)

    for f in range(profiles):
        row = np.zeros(index.count)
        row[[index.x(i, f) for i in range(n)]] = 1.0
        lp.add_constraint(row, "<=", 1.0)

    for i, grid in enumerate(dist.grids):
        lines = np.moveaxis(flat_of, i, -1).reshape(-1, len(grid))
        for line in lines:
            if not explicit:
                for a in range(len(grid) - 1):
                    row = np.zeros(index.count)
                    row[index.x(i, line[a])] = 1.0
                    row[index.x(i, line[a + 1])] = -1.0
                    lp.add_constraint(row, "<=", 0.0)
                continue
            for a, b in _pairs(len(grid), ic_pairs):
                # Truthful at w_a beats reporting w_b
                row = np.zeros(index.count)
                row[index.x(i, line[a])] -= grid[a]
                row[index.p(i, line[a])] += 1.0
                row[index.x(i, line[b])] += grid[a]
                row[index.p(i, line[b])] -= 1.0
                lp.add_constraint(row, "<=", 0.0)

    for f, idx in enumerate(np.ndindex(*shape)):
        values = dist.values(idx)
        allowed = restrict.allowed(values)
        for i in range(n):
            if explicit:
                row = np.zeros(index.count)
                row[index.p(i, f)] = 1.0
                row[index.x(i, f)] = -values[i]
                lp.add_constraint(row, "<=", 0.0)
            lp.var_bounds[index.x(i, f)] = (0.0, 1.0 if allowed[i] else 0.0)

    logger.debug(f"Built {ic_pairs} LP with {lp.num_vars} variables and {len(lp.constraints)} rows ({restrict}).")
    return lp

def mechanism_from_solution(solution: LpSolution, dist: JointDistribution) -> Mechanism:
    """Completes an LP assignment to a mechanism.

    The allocation is clipped to [0, 1], rounding dips along each bidder's own axis
    are removed, and payments are replaced with threshold payments. Assignments of
    either formulation are accepted.
    """
    n = dist.n_bidders
    profiles = dist.profile_count
    if len(solution.assignment) not in (n * profiles, 2 * n * profiles):
        raise InvalidParameters("assignment does not match the distribution", "assignment")
    alloc = np.clip(solution.assignment[:n * profiles].reshape((n,) + dist.shape), 0.0, 1.0)
    for i in range(n):
        alloc[i] = np.maximum.accumulate(alloc[i], axis=i)
    return Mechanism(n, dist.grids, alloc, myerson_payments(alloc, dist.grids))

def solve_optimal_mechanism(
    dist: JointDistribution,
    restrict: Optional[WinnerRestriction] = None,
    ic_pairs: IcPairs = "threshold",
    size_cap: int = LP_SIZE_CAP
) -> Tuple[Mechanism, LpSolution]:
    """Solves the program and returns the completed mechanism with the raw solution."""
    solution = simplex_solve(build_lp(dist, restrict, ic_pairs, size_cap))
    if solution.status != "optimal":
        return Mechanism.zero(dist.grids), solution
    return mechanism_from_solution(solution, dist), solution

def optimal_revenue(dist: JointDistribution, ic_pairs: IcPairs = "threshold", size_cap: int = LP_SIZE_CAP) -> float:
    """Returns the optimal revenue of a truthful-in-expectation, ex-post IR mechanism."""
    solution = simplex_solve(build_lp(dist, WinnerRestriction.everyone(), ic_pairs, size_cap))
    logger.info(f"Optimal revenue {solution.objective_value!r} after {solution.iterations} pivots.")
    return solution.objective_value

def k_lookahead_revenue(dist: JointDistribution, k: int, size_cap: int = LP_SIZE_CAP) -> float:
    """Returns the optimal revenue when only the k highest reported values may win."""
    if int(k) != k or not 1 <= k <= dist.n_bidders:
        raise InvalidParameters(f"k must lie in 1..{dist.n_bidders}", "k")
    solution = simplex_solve(build_lp(dist, WinnerRestriction.top(int(k)), "threshold", size_cap))
    logger.info(f"{k}-lookahead revenue {solution.objective_value!r} after {solution.iterations} pivots.")
    return solution.objective_value


class _Line:
    """One bidder's line: the flat profiles along its own axis and the revenue of each threshold."""

    def __init__(self, bidder: int, flats: np.ndarray, values: np.ndarray, masses: np.ndarray):
        self.bidder = bidder
        self.flats = flats
        tails = np.cumsum(masses[::-1])[::-1]
        # Threshold len(values) means the bidder never wins on this line
        revenue = np.append(values * tails, 0.0)
        self.order = [int(s) for s in np.argsort(-revenue, kind="stable")]
        self.revenue = revenue
        self.best = float(revenue.max())


def brute_force_oracle(dist: JointDistribution, node_budget: int = ORACLE_NODE_BUDGET) -> float:
    """Returns the best revenue of a deterministic IC and IR mechanism by exhaustive search.

    A deterministic monotone allocation is a threshold on every line; charging the
    threshold makes it IC and IR. The search assigns a threshold per line, never
    giving a profile to two bidders, and prunes with the per-line best revenue.
    """
    shape = dist.shape
    if dist.profile_count > ORACLE_MAX_PROFILES:
        raise SizeCapExceeded(dist.profile_count, ORACLE_MAX_PROFILES, "profiles")
    if max(shape) > ORACLE_MAX_GRID:
        raise SizeCapExceeded(max(shape), ORACLE_MAX_GRID, "grid")

    flat_of = np.arange(dist.profile_count).reshape(shape)
    dense = dist.dense
    lines: List[_Line] = []
    for i, grid in enumerate(dist.grids):
        flats = np.moveaxis(flat_of, i, -1).reshape(-1, len(grid))
        masses = np.moveaxis(dense, i, -1).reshape(-1, len(grid))
        for f, mass in zip(flats, masses):
            line = _Line(i, f, np.asarray(grid, dtype=float), mass)
            if line.best > 0:
                lines.append(line)
    lines.sort(key=lambda line: -line.best)
    remaining = np.append(np.cumsum([line.best for line in lines][::-1])[::-1], 0.0)

    owner = np.full(dist.profile_count, -1)
    state: Dict[str, float] = {"best": 0.0, "nodes": 0}

    def search(k: int, revenue: float) -> None:
        state["nodes"] += 1
        if state["nodes"] > node_budget:
            raise SizeCapExceeded(int(state["nodes"]), node_budget, "oracle_nodes")
        if revenue + remaining[k] <= state["best"] + 1e-15:
            return
        if k == len(lines):
            state["best"] = revenue
            return
        line = lines[k]
        for s in line.order:
            won = line.flats[s:]
            if np.any(owner[won] >= 0):
                continue
            owner[won] = line.bidder
            search(k + 1, revenue + float(line.revenue[s]))
            owner[won] = -1

    search(0, 0.0)
    logger.debug(f"Oracle visited {int(state['nodes'])} nodes, best revenue {state['best']!r}.")
    return float(state["best"])
