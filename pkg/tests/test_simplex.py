import math
import numpy as np
import pytest

from shrinklab.auction.simplex import simplex_solve
from shrinklab.cogs.models.exceptions import InvalidParameters, SimplexIterationLimit
from shrinklab.cogs.models.program import LinearProgram

def program(objective, bounds=None):
    objective = np.asarray(objective, dtype=float)
    return LinearProgram(len(objective), objective, var_bounds=bounds or [])

def test_single_upper_bound():
    lp = program([1.0])
    lp.add_constraint(np.array([1.0]), "<=", 3.0)
    solution = simplex_solve(lp)
    assert solution.status == "optimal"
    assert solution.objective_value == pytest.approx(3.0)
    assert solution.assignment == pytest.approx([3.0])

def test_simplex_constraint():
    lp = program([1.0, 1.0])
    lp.add_constraint(np.array([1.0, 1.0]), "<=", 1.0)
    solution = simplex_solve(lp)
    assert solution.objective_value == pytest.approx(1.0)
    assert solution.max_residual <= 1e-7

def test_equalities_lower_bounds_and_greater_than_rows():
    lp = program([1.0, 1.0], bounds=[(1.0, 3.0), (0.0, math.inf)])
    lp.add_constraint(np.array([1.0, 2.0]), "=", 4.0)
    lp.add_constraint(np.array([1.0, 0.0]), ">=", 1.5)
    solution = simplex_solve(lp)
    assert solution.status == "optimal"
    assert solution.objective_value == pytest.approx(3.5)
    assert solution.assignment == pytest.approx([3.0, 0.5])

def test_negative_right_hand_sides():
    lp = program([-1.0, -1.0])
    lp.add_constraint(np.array([-1.0, -1.0]), "<=", -2.0)
    solution = simplex_solve(lp)
    assert solution.status == "optimal"
    assert solution.objective_value == pytest.approx(-2.0)

def test_fixed_variables_are_substituted():
    lp = program([1.0, 1.0], bounds=[(2.0, 2.0), (0.0, math.inf)])
    lp.add_constraint(np.array([1.0, 1.0]), "<=", 5.0)
    solution = simplex_solve(lp)
    assert solution.objective_value == pytest.approx(5.0)
    assert solution.assignment == pytest.approx([2.0, 3.0])

def test_infeasible_program():
    lp = program([1.0])
    lp.add_constraint(np.array([1.0]), "<=", 1.0)
    lp.add_constraint(np.array([1.0]), ">=", 2.0)
    solution = simplex_solve(lp)
    assert solution.status == "infeasible"
    assert math.isnan(solution.objective_value)

def test_unbounded_program():
    lp = program([1.0, 0.0])
    lp.add_constraint(np.array([0.0, 1.0]), "<=", 1.0)
    solution = simplex_solve(lp)
    assert solution.status == "unbounded"
    assert solution.objective_value == math.inf

def test_redundant_equalities_are_dropped():
    lp = program([1.0, 2.0])
    lp.add_constraint(np.array([1.0, 1.0]), "=", 1.0)
    lp.add_constraint(np.array([2.0, 2.0]), "=", 2.0)
    solution = simplex_solve(lp)
    assert solution.status == "optimal"
    assert solution.objective_value == pytest.approx(2.0)

def test_degenerate_program_terminates():
    # Many redundant rows through the optimal vertex
    lp = program([1.0, 1.0, 1.0])
    for k in range(1, 30):
        lp.add_constraint(np.array([1.0, k / 30, 0.0]), "<=", 1.0)
        lp.add_constraint(np.array([0.0, 1.0, k / 30]), "<=", 1.0)
    lp.add_constraint(np.array([0.0, 0.0, 1.0]), "<=", 1.0)
    solution = simplex_solve(lp)
    assert solution.status == "optimal"
    assert solution.max_residual <= 1e-7
    assert solution.objective_value == pytest.approx(simplex_solve(lp).objective_value)

def test_equal_revenue_pair_as_a_program():
    # One bidder, values 2 and 4 with probability 1/2: posting either price earns 2
    lp = program([0.0, 0.0, 0.5, 0.5], bounds=[(0.0, 1.0), (0.0, 1.0), (0.0, math.inf), (0.0, math.inf)])
    lp.add_constraint(np.array([-2.0, 2.0, 1.0, -1.0]), "<=", 0.0)
    lp.add_constraint(np.array([4.0, -4.0, -1.0, 1.0]), "<=", 0.0)
    lp.add_constraint(np.array([-2.0, 0.0, 1.0, 0.0]), "<=", 0.0)
    lp.add_constraint(np.array([0.0, -4.0, 0.0, 1.0]), "<=", 0.0)
    assert simplex_solve(lp).objective_value == pytest.approx(2.0)

def test_iteration_limit():
    lp = program([1.0, 1.0])
    lp.add_constraint(np.array([1.0, 2.0]), "<=", 4.0)
    lp.add_constraint(np.array([3.0, 1.0]), "<=", 6.0)
    with pytest.raises(SimplexIterationLimit):
        simplex_solve(lp, max_iterations=0)

def test_program_validation():
    with pytest.raises(InvalidParameters):
        LinearProgram(2, np.zeros(3))
    lp = program([1.0])
    with pytest.raises(InvalidParameters):
        lp.add_constraint(np.array([1.0]), "<", 1.0)
    with pytest.raises(InvalidParameters):
        simplex_solve(program([1.0], bounds=[(-math.inf, 1.0)]))

def test_text_export_lists_objective_first():
    lp = program([1.0, 2.0])
    lp.add_constraint(np.array([1.0, 1.0]), "<=", 4.0)
    lines = lp.to_text().splitlines()
    assert lines[0] == "max 1.0 2.0"
    assert lines[1] == "1.0 1.0 <= 4.0"
    assert lines[2] == "bounds 0.0 inf"
