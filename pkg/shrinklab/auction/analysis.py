"""Closed forms of the shrinkage construction, the identity suite and the revenue-gap sweep."""
from __future__ import annotations

import math
import numpy as np

from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from shrinklab.constants import (
    HARMONIC_CHUNK, IDENTITY_TOLERANCE, INSTANCE_SIZE_CAP, K_DEFAULT, LIMIT_RATIO, LP_SIZE_CAP, Z_DEFAULT
)
from shrinklab.auction.distributions import build_hard_instance, equal_revenue_family
from shrinklab.auction.mechanisms import expected_revenue, explicit_full_mechanism
from shrinklab.auction.optimal import k_lookahead_revenue, optimal_revenue
from shrinklab.cogs.models.distributions import BalancedSpec
from shrinklab.cogs.models.exceptions import InvalidParameters, LemmaViolation
from shrinklab.cogs.models.reports import GapReport, HarmonicBounds, LemmaCheck
from shrinklab.cogs.utils.aliases import Scalar
from shrinklab.cogs.utils.logger import get_logger

logger = get_logger("analysis")


def _check_d_z(d: int, z: Scalar) -> None:
    if int(d) != d or d < 4:
        raise InvalidParameters("d must be an integer of at least 4", "d")
    if not 1 < z < d:
        raise InvalidParameters("z must satisfy 1 < z < d", "z")

def harmonic_sum(b: int, a: int) -> float:
    """Returns the sum of 1/j for j = b..a, or 0 when a < b.

    Terms are summed in chunks from the small end and the chunk totals combined with fsum.
    """
    if b < 1:
        raise InvalidParameters("harmonic sums start at 1 or later", "b")
    if a < b:
        return 0.0
    partials = []
    for hi in range(a, b - 1, -HARMONIC_CHUNK):
        lo = max(b, hi - HARMONIC_CHUNK + 1)
        partials.append(float(np.sum(1.0 / np.arange(hi, lo - 1, -1, dtype=float))))
    return math.fsum(partials)

def prob_not_top(d: int, z: Scalar = Z_DEFAULT) -> float:
    """Returns (z - 1) * sum_{j = d - floor(d/z) + 1}^{d} 1/j, the closed form of Pr[v_1 != t_h]."""
    _check_d_z(d, z)
    return float(z - 1) * harmonic_sum(int(d) - math.floor(Fraction(d) / Fraction(z)) + 1, int(d))

def prob_not_top_exact(d: int, z: Scalar = Z_DEFAULT) -> float:
    """Returns Pr[v_1 != t_h] on the built instance: (z - 1) * sum_{j = d - m + 2}^{d} 1/j."""
    _check_d_z(d, z)
    m = math.floor(Fraction(d) / Fraction(z)) - 1
    return float(z - 1) * harmonic_sum(int(d) - m + 2, int(d))

def ratio_bound(d: int, epsilon: float, z: Scalar = Z_DEFAULT) -> float:
    """Returns z / (z + prob_not_top(d, z) * (1 - 2 eps))."""
    if not 0 <= epsilon <= 0.5:
        raise InvalidParameters("epsilon must lie in [0, 1/2]", "epsilon")
    z = float(z)
    return z / (z + prob_not_top(d, z) * (1 - 2 * epsilon))

def limit_ratio() -> float:
    """Returns e/(e+1)."""
    return math.e / (math.e + 1)

def harmonic_bounds(b: int, a: int) -> HarmonicBounds:
    """Returns ln((a+1)/b) <= sum_{j=b}^{a} 1/j <= ln(a/(b-1)) together with the sum.

    The upper bound is infinite when b = 1.
    """
    if int(b) != b or b < 1:
        raise InvalidParameters("b must be a positive integer", "b")
    if int(a) != a or a < b:
        raise InvalidParameters("a must be an integer of at least b", "a")
    lower = math.log((a + 1) / b)
    upper = math.inf if b == 1 else math.log(a / (b - 1))
    total = harmonic_sum(int(b), int(a))
    slack = 4 * np.finfo(float).eps * max(1.0, total)
    if not lower - slack <= total <= upper + slack:
        raise LemmaViolation(f"sum {total!r} is outside [{lower!r}, {upper!r}]", f"harmonic[{b}..{a}]")
    return HarmonicBounds(lower, upper, total)


def _worst(pairs: Sequence[Tuple[Scalar, Scalar]], exact: bool) -> float:
    """Returns the largest gap between sides; relative to the right side when inexact."""
    worst = 0.0
    for lhs, rhs in pairs:
        if exact:
            worst = max(worst, float(abs(Fraction(lhs) - Fraction(rhs))))
        else:
            worst = max(worst, abs(float(lhs) - float(rhs)) / max(1.0, abs(float(rhs))))
    return worst

def lemma_identities(d: int, z: Scalar = Z_DEFAULT, tolerance: float = IDENTITY_TOLERANCE) -> List[LemmaCheck]:
    """Checks the five closed-form identities of the family D_0..D_{m-1}.

    With a Fraction z every identity must hold exactly; otherwise within the
    tolerance relative to the larger of 1 and the right-hand side.
    """
    family = equal_revenue_family(d, z)
    exact = family.exact
    m = family.m
    q, qbar, t = list(family.q), list(family.qbar), list(family.t)
    prefix = [sum(q[:y], Fraction(0) if exact else 0.0) for y in range(m)]

    items: List[Tuple[str, Callable[[], List[Tuple[Scalar, Scalar]]]]] = [
        ("qbar_y * t_y = z", lambda: [(qbar[y] * t[y], z) for y in range(m)]),
        ("qbar_{y+1} + q_y = qbar_y", lambda: [(qbar[y + 1] + q[y], qbar[y]) for y in range(m - 1)]),
        ("sum_{j<y} q_j = (z-1) y / (d-y)", lambda: [(prefix[y], (z - 1) * y / (d - y)) for y in range(1, m)]),
        ("qbar_y = (d - z y) / (d - y)", lambda: [(qbar[y], (d - z * y) / (d - y)) for y in range(m)]),
        ("qbar_y + (d-y-1) q_y = z", lambda: [(qbar[y] + (d - y - 1) * q[y], z) for y in range(m - 1)]),
    ]
    checks = []
    for item, (description, pairs) in enumerate(items, start=1):
        worst = _worst(pairs(), exact)
        passed = worst == 0.0 if exact else worst <= tolerance
        checks.append(LemmaCheck(d=int(d), item=item, passed=passed, worst_error=worst, description=description))
    return checks


def _analytic_row(d: int, epsilon: float, z: float) -> GapReport:
    rev_shrunk = z
    rev_full = z + prob_not_top(d, z) * (1 - 2 * epsilon)
    ratio = rev_shrunk / rev_full
    return GapReport(
        d=d, epsilon=epsilon, K=None, rev_shrunk=rev_shrunk, rev_full=rev_full, ratio=ratio,
        bound_formula=ratio_bound(d, epsilon, z), limit_gap=abs(ratio - LIMIT_RATIO)
    )

def _cross_checked_row(d: int, epsilon: float, z: float, n: int, K: int, size_cap: int, lp_cap: int) -> GapReport:
    report = _analytic_row(d, epsilon, z)
    inst = build_hard_instance(n, BalancedSpec(epsilon, d, K), z, size_cap)
    report.K = K
    report.lp_rev_shrunk = optimal_revenue(inst.joint_shrunk, size_cap=lp_cap)
    report.lp_rev_full = optimal_revenue(inst.joint_n, size_cap=lp_cap)
    report.lp_rev_lookahead = k_lookahead_revenue(inst.joint_n, n - 1, size_cap=lp_cap)
    report.lp_ratio = report.lp_rev_shrunk / report.lp_rev_full
    report.explicit_rev_full = expected_revenue(explicit_full_mechanism(inst), inst.joint_n)
    report.trunc_error = inst.trunc_error
    return report

def gap_sweep(
    d_list: Sequence[int],
    eps_list: Sequence[float],
    z: Scalar = Z_DEFAULT,
    lp_cross_check: bool = False,
    n: int = 3,
    K: int = K_DEFAULT,
    workers: int = 1,
    size_cap: int = INSTANCE_SIZE_CAP,
    lp_cap: int = LP_SIZE_CAP
) -> List[GapReport]:
    """Returns one GapReport per (d, epsilon), in input order.

    Rows are analytic. With lp_cross_check, every row also carries the LP optima of a
    truncated instance with K blocks and the revenue of the explicit full mechanism.
    """
    if not d_list or not eps_list:
        raise InvalidParameters("sweep needs at least one d and one epsilon", "d" if not d_list else "epsilon")
    if workers < 1:
        raise InvalidParameters("workers must be at least 1", "workers")
    z = float(z)
    points = [(int(d), float(epsilon)) for d in d_list for epsilon in eps_list]
    for d, epsilon in points:
        _check_d_z(d, z)
        if not 0 <= epsilon <= 0.5:
            raise InvalidParameters("epsilon must lie in [0, 1/2]", "epsilon")

    def row(point: Tuple[int, float]) -> GapReport:
        d, epsilon = point
        if lp_cross_check:
            return _cross_checked_row(d, epsilon, z, n, K, size_cap, lp_cap)
        return _analytic_row(d, epsilon, z)

    if workers == 1:
        reports = [row(point) for point in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            reports = list(executor.map(row, points))
    logger.info(f"Sweep finished with {len(reports)} rows.")
    return reports

def sweep_is_decreasing(reports: Sequence[GapReport], epsilon: Optional[float] = None) -> bool:
    """Returns true if ratios strictly decrease along increasing d at a fixed epsilon."""
    rows = sorted((r for r in reports if epsilon is None or r.epsilon == epsilon), key=lambda r: r.d)
    return all(b.ratio < a.ratio for a, b in zip(rows, rows[1:]))
