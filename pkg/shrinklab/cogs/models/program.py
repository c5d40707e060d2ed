from __future__ import annotations

import math
import numpy as np

from dataclasses import dataclass, field
from typing import List, Literal, NamedTuple, Optional, Tuple

from shrinklab.cogs.models.exceptions import InvalidParameters

Relation = Literal["<=", "=", ">="]
Status = Literal["optimal", "infeasible", "unbounded"]

RELATIONS = ("<=", "=", ">=")

class Constraint(NamedTuple):
    coefficients: np.ndarray
    relation: Relation
    bound: float


@dataclass(eq=False)
class LinearProgram:
    """A dense maximization program with per-variable bounds."""

    num_vars: int
    objective: np.ndarray
    constraints: List[Constraint] = field(default_factory=list)
    var_bounds: List[Tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.objective) != self.num_vars:
            raise InvalidParameters("objective length differs from the number of variables", "objective")
        if not self.var_bounds:
            self.var_bounds = [(0.0, math.inf)] * self.num_vars
        if len(self.var_bounds) != self.num_vars:
            raise InvalidParameters("bounds length differs from the number of variables", "var_bounds")

    def add_constraint(self, coefficients: np.ndarray, relation: Relation, bound: float) -> None:
        """Appends a constraint row."""
        if relation not in RELATIONS:
            raise InvalidParameters(f"unknown relation {relation}", "relation")
        if len(coefficients) != self.num_vars:
            raise InvalidParameters("constraint length differs from the number of variables", "constraints")
        self.constraints.append(Constraint(np.asarray(coefficients, dtype=float), relation, float(bound)))

    def matrix(self) -> Tuple[np.ndarray, List[str], np.ndarray]:
        """Returns the constraint rows as (A, relations, b)."""
        if not self.constraints:
            return np.zeros((0, self.num_vars)), [], np.zeros(0)
        a = np.vstack([c.coefficients for c in self.constraints])
        return a, [c.relation for c in self.constraints], np.array([c.bound for c in self.constraints])

    def residual(self, assignment: np.ndarray) -> float:
        """Returns the largest constraint or bound violation of an assignment."""
        worst = 0.0
        a, relations, b = self.matrix()
        if len(b):
            lhs = a @ assignment
            for value, relation, bound in zip(lhs, relations, b):
                if relation == "<=":
                    worst = max(worst, value - bound)
                elif relation == ">=":
                    worst = max(worst, bound - value)
                else:
                    worst = max(worst, abs(value - bound))
        lo = np.array([lb for lb, _ in self.var_bounds])
        hi = np.array([ub for _, ub in self.var_bounds])
        worst = max(worst, float(np.max(lo - assignment, initial=0.0)), float(np.max(assignment - hi, initial=0.0)))
        return worst

    def to_text(self) -> str:
        """Returns the program in a plain-text form: objective first, then one line per constraint."""
        lines = ["max " + " ".join(repr(float(c)) for c in self.objective)]
        for c in self.constraints:
            lines.append(" ".join(repr(float(v)) for v in c.coefficients) + f" {c.relation} {c.bound!r}")
        for lo, hi in self.var_bounds:
            lines.append(f"bounds {lo!r} {hi!r}")
        return "\n".join(lines) + "\n"


class LpSolution(NamedTuple):
    status: Status
    objective_value: float
    assignment: np.ndarray
    iterations: int
    max_residual: float = 0.0


@dataclass(frozen=True)
class WinnerRestriction:
    """Limits which bidders may win at a profile: everyone, or the k highest values."""

    mode: Literal["all", "top_k"] = "all"
    k: Optional[int] = None
    tie_break: Literal["lowest-index"] = "lowest-index"

    def __post_init__(self):
        if self.mode == "top_k" and (self.k is None or self.k < 1):
            raise InvalidParameters("top-k restriction needs k >= 1", "k")

    @classmethod
    def everyone(cls) -> WinnerRestriction:
        return cls("all")

    @classmethod
    def top(cls, k: int) -> WinnerRestriction:
        return cls("top_k", k)

    def allowed(self, values: Tuple[float, ...]) -> Tuple[bool, ...]:
        """Returns, per bidder, whether that bidder may win at the given value profile."""
        if self.mode == "all":
            return (True,) * len(values)
        order = sorted(range(len(values)), key=lambda i: (-values[i], i))
        winners = set(order[:self.k])
        return tuple(i in winners for i in range(len(values)))

    def __str__(self) -> str:
        return "all" if self.mode == "all" else f"top:{self.k}"
