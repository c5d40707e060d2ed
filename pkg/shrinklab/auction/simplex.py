"""Dense two-phase primal simplex."""
from __future__ import annotations

import math
import numpy as np

from typing import List, Optional, Tuple

from shrinklab.constants import BLAND_AFTER_DEGENERATE, PIVOT_TOLERANCE
from shrinklab.cogs.models.exceptions import InvalidParameters, SimplexIterationLimit
from shrinklab.cogs.models.program import LinearProgram, LpSolution
from shrinklab.cogs.utils.logger import get_logger

logger = get_logger("simplex")

class Tableau:
    """A simplex tableau for max c'y s.t. Ay = b, y >= 0, b >= 0.

    The last row holds the reduced costs and, in its last column, minus the objective value.
    Columns listed in `blocked` never enter the basis.
    """

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: List[int]):
        self.m, self.n = a.shape
        self.table = np.zeros((self.m + 1, self.n + 1))
        self.table[:self.m, :self.n] = a
        self.table[:self.m, self.n] = b
        self.basis = list(basis)
        self.blocked = np.zeros(self.n, dtype=bool)
        self.iterations = 0
        self.degenerate_streak = 0
        self.row_ids = list(range(self.m))

    def price(self, c: np.ndarray) -> None:
        """Sets the objective row for costs c under the current basis."""
        cb = c[self.basis]
        self.table[self.m, :self.n] = c - cb @ self.table[:self.m, :self.n]
        self.table[self.m, self.n] = -(cb @ self.table[:self.m, self.n])

    @property
    def objective(self) -> float:
        return -float(self.table[self.m, self.n])

    def pivot(self, row: int, col: int) -> None:
        self.basis[row] = col
        self.table[row, :] /= self.table[row, col]
        factors = self.table[:, col].copy()
        factors[row] = 0.0
        self.table -= np.outer(factors, self.table[row, :])
        self.table[:, col] = 0.0
        self.table[row, col] = 1.0

    def entering(self, tolerance: float) -> Optional[int]:
        reduced = np.where(self.blocked, -np.inf, self.table[self.m, :self.n])
        candidates = np.flatnonzero(reduced > tolerance)
        if len(candidates) == 0:
            return None
        if self.degenerate_streak >= BLAND_AFTER_DEGENERATE:
            return int(candidates[0])
        return int(candidates[np.argmax(reduced[candidates])])

    def leaving(self, col: int, tolerance: float) -> Optional[int]:
        column = self.table[:self.m, col]
        # Pivot elements are judged against the size of their column
        rows = np.flatnonzero(column > tolerance * max(1.0, float(np.abs(column).max(initial=0.0))))
        if len(rows) == 0:
            return None
        ratios = self.table[rows, self.n] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tolerance]
        # Bland: among tied rows, the smallest basic variable leaves
        return int(min(ties, key=lambda r: self.basis[r]))

    def run(self, max_iterations: int, tolerance: float) -> str:
        """Pivots to optimality. Returns 'optimal' or 'unbounded'."""
        while True:
            col = self.entering(tolerance)
            if col is None:
                return "optimal"
            row = self.leaving(col, tolerance)
            if row is None:
                return "unbounded"
            if self.iterations >= max_iterations:
                raise SimplexIterationLimit(f"no optimum after {max_iterations} pivots", "iterations")
            if self.table[row, self.n] <= tolerance:
                self.degenerate_streak += 1
            else:
                self.degenerate_streak = 0
            self.pivot(row, col)
            self.iterations += 1

    def drop_row(self, row: int) -> None:
        self.table = np.delete(self.table, row, axis=0)
        del self.basis[row]
        del self.row_ids[row]
        self.m -= 1


class StandardForm:
    """The program rewritten as max c'y, Ay = b, y >= 0 with b >= 0.

    Fixed variables are substituted out and the rest shifted by their lower bound;
    finite upper bounds become rows.
    """

    def __init__(self, lp: LinearProgram):
        lo = np.array([bound[0] for bound in lp.var_bounds], dtype=float)
        hi = np.array([bound[1] for bound in lp.var_bounds], dtype=float)
        if np.any(~np.isfinite(lo)):
            raise InvalidParameters("every variable needs a finite lower bound", "var_bounds")
        if np.any(hi < lo):
            raise InvalidParameters("a variable has an empty bound interval", "var_bounds")

        self.num_vars = lp.num_vars
        self.lo = lo
        self.fixed = hi == lo
        self.free_columns = np.flatnonzero(~self.fixed)
        a_full, relations, b = lp.matrix()
        b = b - a_full @ lo if len(b) else b
        a = a_full[:, self.free_columns]

        rows: List[np.ndarray] = [row for row in a]
        rhs: List[float] = list(b)
        kinds: List[str] = list(relations)
        for k, col in enumerate(self.free_columns):
            if math.isfinite(hi[col]):
                row = np.zeros(len(self.free_columns))
                row[k] = 1.0
                rows.append(row)
                rhs.append(hi[col] - lo[col])
                kinds.append("<=")

        structural = len(self.free_columns)
        n_slack = sum(1 for kind in kinds if kind != "=")
        self.a = np.zeros((len(rows), structural + n_slack))
        self.b = np.zeros(len(rows))
        self.slack_rows: List[int] = []
        slack = structural
        for r, (row, value, kind) in enumerate(zip(rows, rhs, kinds)):
            self.a[r, :structural] = row
            self.b[r] = value
            if kind != "=":
                self.a[r, slack] = 1.0 if kind == "<=" else -1.0
                self.slack_rows.append(slack)
                slack += 1
            else:
                self.slack_rows.append(-1)
        flip = self.b < 0
        self.a[flip] *= -1
        self.b[flip] *= -1
        self.c = np.zeros(self.a.shape[1])
        self.c[:structural] = lp.objective[self.free_columns]
        self.structural = structural

    def initial_basis(self) -> Tuple[List[int], List[int]]:
        """Returns (basis, rows needing an artificial variable)."""
        basis: List[int] = []
        artificial_rows: List[int] = []
        for r, slack in enumerate(self.slack_rows):
            if slack >= 0 and self.a[r, slack] > 0:
                basis.append(slack)
            else:
                basis.append(-1)
                artificial_rows.append(r)
        return basis, artificial_rows

    def recover(self, y: np.ndarray) -> np.ndarray:
        """Maps a standard-form point back to the original variables."""
        x = self.lo.copy()
        x[self.free_columns] += y[:self.structural]
        return x


def _refine(form: StandardForm, keep_rows: List[int], basis: List[int], y: np.ndarray) -> np.ndarray:
    """Re-solves the final basis against the original rows to strip accumulated round-off."""
    a = form.a[keep_rows][:, basis]
    try:
        values = np.linalg.solve(a, form.b[keep_rows])
    except np.linalg.LinAlgError:
        return y
    refined = np.zeros_like(y)
    refined[basis] = values
    if np.min(values, initial=0.0) < -1e-9:
        return y
    return np.maximum(refined, 0.0)

def simplex_solve(lp: LinearProgram, tolerance: float = PIVOT_TOLERANCE, max_iterations: Optional[int] = None) -> LpSolution:
    """Solves a maximization program with a two-phase dense tableau simplex.

    Dantzig pricing is used until a run of degenerate pivots, after which Bland's rule
    takes over until the objective moves again.
    """
    form = StandardForm(lp)
    rows, cols = form.a.shape
    if max_iterations is None:
        max_iterations = 50 * (rows + cols) + 1000
    basis, artificial_rows = form.initial_basis()

    n_art = len(artificial_rows)
    a = np.hstack([form.a, np.zeros((rows, n_art))])
    for k, r in enumerate(artificial_rows):
        a[r, cols + k] = 1.0
        basis[r] = cols + k
    tableau = Tableau(a, form.b, basis)

    if n_art:
        phase_one = np.zeros(cols + n_art)
        phase_one[cols:] = -1.0
        tableau.price(phase_one)
        tableau.run(max_iterations, tolerance)
        if tableau.objective < -max(tolerance, 1e-9 * max(1.0, float(np.abs(form.b).max(initial=0.0)))):
            logger.debug(f"Phase one ended at {tableau.objective!r}; program is infeasible.")
            return LpSolution("infeasible", math.nan, np.zeros(0), tableau.iterations, math.inf)
        # Drive remaining artificial variables out of the basis
        r = 0
        while r < tableau.m:
            if tableau.basis[r] >= cols:
                candidates = np.flatnonzero(np.abs(tableau.table[r, :cols]) > tolerance)
                if len(candidates):
                    tableau.pivot(r, int(candidates[0]))
                else:
                    tableau.drop_row(r)
                    continue
            r += 1
        tableau.blocked[cols:] = True

    kept = list(tableau.row_ids)
    objective = np.zeros(cols + n_art)
    objective[:cols] = form.c
    tableau.degenerate_streak = 0
    tableau.price(objective)
    status = tableau.run(max_iterations, tolerance)
    if status == "unbounded":
        return LpSolution("unbounded", math.inf, np.zeros(0), tableau.iterations, math.inf)

    y = np.zeros(cols + n_art)
    y[tableau.basis] = tableau.table[:tableau.m, tableau.n]
    y = np.maximum(y, 0.0)[:cols]
    candidates = [y]
    if all(col < cols for col in tableau.basis):
        candidates.append(_refine(form, kept, list(tableau.basis), y))
    best = min((form.recover(v) for v in candidates), key=lp.residual)
    residual = lp.residual(best)
    value = float(lp.objective @ best)
    logger.debug(f"Simplex finished after {tableau.iterations} pivots: objective {value!r}, residual {residual:.2e}.")
    return LpSolution("optimal", value, best, tableau.iterations, residual)

