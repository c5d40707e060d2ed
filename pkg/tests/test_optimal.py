import numpy as np
import pytest

from shrinklab.constants import Z_DEFAULT
from shrinklab.auction.mechanisms import expected_revenue, explicit_full_mechanism, lookahead_mechanism, validate_mechanism
from shrinklab.auction.optimal import (
    brute_force_oracle, build_lp, k_lookahead_revenue, mechanism_from_solution, optimal_revenue,
    solve_optimal_mechanism, threshold_coefficients
)
from shrinklab.auction.analysis import prob_not_top, prob_not_top_exact
from shrinklab.auction.simplex import simplex_solve
from shrinklab.cogs.models.distributions import JointDistribution
from shrinklab.cogs.models.exceptions import InvalidParameters, SizeCapExceeded
from shrinklab.cogs.models.program import WinnerRestriction

from tests.conftest import random_distribution

def test_single_bidder_program_layout(single_bidder):
    lp = build_lp(single_bidder)
    assert lp.num_vars == 4
    relations = [c.relation for c in lp.constraints]
    # Feasibility and IR per profile, both directions of the single IC pair
    assert len(relations) == 2 + 2 + 2
    assert lp.objective == pytest.approx([0.0, 0.0, 0.5, 0.5])
    assert lp.var_bounds[:2] == [(0.0, 1.0), (0.0, 1.0)]

def test_threshold_program_layout(single_bidder):
    lp = build_lp(single_bidder, ic_pairs="threshold")
    assert lp.num_vars == 2
    # Feasibility per profile and one monotonicity row
    assert len(lp.constraints) == 2 + 1
    # Threshold payments: the low value earns 1 * 1/2 - (2 - 1) * 1/2
    assert lp.objective == pytest.approx([0.0, 1.0])
    assert lp.constraints[-1].coefficients == pytest.approx([1.0, -1.0])

def test_threshold_coefficients_sum_to_posted_price_revenue():
    grid = np.array([1.0, 2.0, 4.0])
    masses = np.array([0.5, 0.25, 0.25])
    coefficients = threshold_coefficients(grid, masses)
    # Selling from index a onward earns w_a Pr[value >= w_a]
    for a in range(3):
        assert coefficients[a:].sum() == pytest.approx(grid[a] * masses[a:].sum())

def test_all_pairs_adds_every_ordered_pair():
    grid = np.array([1.0, 2.0, 3.0])
    dist = JointDistribution(1, (grid,), {(0,): 0.2, (1,): 0.3, (2,): 0.5})
    assert len(build_lp(dist, ic_pairs="all").constraints) == 3 + 6 + 3
    assert len(build_lp(dist, ic_pairs="adjacent").constraints) == 3 + 4 + 3

def test_top_one_excludes_the_lower_bidder(correlated_pair):
    lp = build_lp(correlated_pair, WinnerRestriction.top(1))
    # Profiles in order (0,0), (0,1), (1,0), (1,1); ties go to bidder 0
    bidder_one = lp.var_bounds[4:8]
    assert bidder_one == [(0.0, 0.0), (0.0, 1.0), (0.0, 0.0), (0.0, 0.0)]
    assert lp.var_bounds[0:4] == [(0.0, 1.0), (0.0, 0.0), (0.0, 1.0), (0.0, 1.0)]

def test_top_restriction_never_selects_the_weak_bidder(instance):
    restriction = WinnerRestriction.top(instance.n - 1)
    for idx in instance.joint_n.pmf:
        assert restriction.allowed(instance.joint_n.values(idx))[-1] is False

def test_program_size_cap(instance):
    with pytest.raises(SizeCapExceeded) as e:
        build_lp(instance.joint_n, size_cap=100)
    assert e.value.field == "profiles"

def test_restriction_validation(single_bidder):
    with pytest.raises(InvalidParameters):
        WinnerRestriction.top(0)
    with pytest.raises(InvalidParameters):
        k_lookahead_revenue(single_bidder, 2)

def test_small_optima(single_bidder, correlated_pair):
    assert optimal_revenue(single_bidder) == pytest.approx(1.0, abs=1e-7)
    assert optimal_revenue(correlated_pair) == pytest.approx(1.5, abs=1e-7)
    point = JointDistribution(1, (np.array([0.75]),), {(0,): 1.0})
    assert optimal_revenue(point) == pytest.approx(0.75, abs=1e-7)
    pair = JointDistribution(1, (np.array([2.0, 4.0]),), {(0,): 0.5, (1,): 0.5})
    assert optimal_revenue(pair) == pytest.approx(2.0, abs=1e-7)

def test_oracle_matches_small_optima(single_bidder, correlated_pair):
    assert brute_force_oracle(single_bidder) == pytest.approx(1.0, abs=1e-6)
    assert brute_force_oracle(correlated_pair) == pytest.approx(1.5, abs=1e-6)

def test_oracle_caps(instance, rng):
    with pytest.raises(SizeCapExceeded):
        brute_force_oracle(instance.joint_shrunk)
    with pytest.raises(SizeCapExceeded) as e:
        brute_force_oracle(random_distribution(rng, 3, 3, sparsity=0.0), node_budget=1)
    assert e.value.field == "oracle_nodes"

def test_oracle_never_beats_the_program(rng):
    for _ in range(10):
        dist = random_distribution(rng, 2, 3)
        assert brute_force_oracle(dist) <= optimal_revenue(dist) + 1e-7

def test_completed_solution_is_a_valid_mechanism(rng):
    for _ in range(5):
        dist = random_distribution(rng, 2, 3)
        mech, solution = solve_optimal_mechanism(dist)
        assert solution.status == "optimal"
        assert solution.max_residual <= 1e-7
        assert validate_mechanism(mech, dist).ok
        assert expected_revenue(mech, dist) >= solution.objective_value - 1e-7
        assert mechanism_from_solution(solution, dist).alloc == pytest.approx(mech.alloc)

def test_every_formulation_has_the_same_optimum(rng):
    for _ in range(5):
        dist = random_distribution(rng, 2, 3)
        threshold = optimal_revenue(dist, ic_pairs="threshold")
        assert optimal_revenue(dist, ic_pairs="adjacent") == pytest.approx(threshold, abs=1e-7)
        assert optimal_revenue(dist, ic_pairs="all") == pytest.approx(threshold, abs=1e-7)
        restricted = [
            simplex_solve(build_lp(dist, WinnerRestriction.top(1), ic_pairs=mode)).objective_value
            for mode in ("threshold", "adjacent")
        ]
        assert restricted[0] == pytest.approx(restricted[1], abs=1e-7)

def test_explicit_solution_completes_to_a_mechanism(correlated_pair):
    mech, solution = solve_optimal_mechanism(correlated_pair, ic_pairs="adjacent")
    assert len(solution.assignment) == 2 * 2 * 4
    assert validate_mechanism(mech, correlated_pair).ok
    assert expected_revenue(mech, correlated_pair) == pytest.approx(1.5, abs=1e-7)

def test_program_survives_nearly_equal_values():
    # Neighbouring values a few 1e-12 apart, far below the pivot tolerance
    grid = 0.98 + 0.01 * (1 - 0.5 ** np.arange(30, 36))
    masses = np.full(len(grid), 1 / len(grid))
    dist = JointDistribution(1, (grid,), {(k,): float(q) for k, q in enumerate(masses)})
    best_posted = max(grid[a] * masses[a:].sum() for a in range(len(grid)))
    mech, solution = solve_optimal_mechanism(dist)
    assert solution.status == "optimal"
    assert solution.objective_value == pytest.approx(best_posted, abs=1e-9)
    assert validate_mechanism(mech, dist).ok

def test_lookahead_bounds_on_random_instances(rng):
    for _ in range(20):
        n = int(rng.integers(2, 4))
        dist = random_distribution(rng, n, int(rng.integers(2, 4)))
        opt = optimal_revenue(dist)
        lookahead = expected_revenue(lookahead_mechanism(dist), dist)
        assert lookahead >= opt / 2 - 1e-7
        previous = 0.0
        for k in range(1, n + 1):
            revenue = k_lookahead_revenue(dist, k)
            assert revenue >= (2 * k - 1) / (3 * k - 1) * opt - 1e-7
            assert revenue >= previous - 1e-7
            previous = revenue
        assert previous == pytest.approx(opt, abs=1e-7)
        assert k_lookahead_revenue(dist, 1) >= lookahead - 1e-7

@pytest.fixture(scope="module")
def instance_optima(instance):
    return {
        "shrunk": optimal_revenue(instance.joint_shrunk),
        "full": optimal_revenue(instance.joint_n),
        "lookahead": k_lookahead_revenue(instance.joint_n, instance.n - 1),
    }

def test_shrunken_market_optimum_is_about_z(instance, instance_optima):
    assert instance_optima["shrunk"] >= Z_DEFAULT - 1e-7
    assert abs(instance_optima["shrunk"] - Z_DEFAULT) <= 10 * instance.trunc_error

def test_full_market_optimum_dominates_the_explicit_mechanism(instance, instance_optima):
    explicit = expected_revenue(explicit_full_mechanism(instance), instance.joint_n)
    assert instance_optima["full"] >= explicit - 1e-7
    assert instance_optima["full"] >= instance_optima["shrunk"] - 1e-7

def test_dropping_the_weak_bidder_equals_the_lookahead(instance, instance_optima):
    assert instance_optima["lookahead"] == pytest.approx(instance_optima["shrunk"], abs=1e-6)

def test_instance_program_residuals(instance):
    for dist in (instance.joint_shrunk, instance.joint_n):
        solution = simplex_solve(build_lp(dist, ic_pairs="threshold"))
        assert solution.status == "optimal"
        assert solution.max_residual <= 1e-7
        mech = mechanism_from_solution(solution, dist)
        assert validate_mechanism(mech, dist).ok
        assert expected_revenue(mech, dist) >= solution.objective_value - 1e-7

def test_full_market_optimum_matches_the_closed_form(instance, instance_optima):
    eps = instance.params.epsilon
    closed_form = Z_DEFAULT + prob_not_top(instance.params.d, Z_DEFAULT) * (1 - 2 * eps)
    assert abs(instance_optima["full"] - closed_form) <= 20 * instance.trunc_error
    # The explicit mechanism realizes the exact harmonic range on the built instance
    exact = Z_DEFAULT + prob_not_top_exact(instance.params.d, Z_DEFAULT) * (1 - 2 * eps)
    assert instance_optima["full"] >= exact - 10 * instance.trunc_error
