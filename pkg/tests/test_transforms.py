import numpy as np
import pytest

from shrinklab.constants import Z_DEFAULT
from shrinklab.auction.distributions import build_hard_instance
from shrinklab.auction.mechanisms import (
    expected_revenue, explicit_shrunken_mechanism, is_high_priced, lookahead_mechanism, myerson_payments,
    posted_price_mechanism, validate_mechanism
)
from shrinklab.auction.transforms import high_priced_transform, shift_report, shift_transform, unreachable_profiles
from shrinklab.cogs.models.distributions import BalancedSpec
from shrinklab.cogs.models.exceptions import GridMismatch, NotHighPriced
from shrinklab.cogs.models.mechanism import Mechanism

def mixture(parts, weights):
    alloc = sum(w * p.alloc for w, p in zip(weights, parts))
    pay = sum(w * p.pay for w, p in zip(weights, parts))
    return Mechanism(parts[0].n_bidders, parts[0].grids, alloc, pay)

def blocks_for(inst):
    grids = inst.joint_shrunk.grids
    return {
        "explicit": explicit_shrunken_mechanism(inst),
        "lookahead": lookahead_mechanism(inst.joint_shrunk),
        "zero": Mechanism.zero(grids),
    }

@pytest.fixture(scope="module")
def building_blocks(instance):
    return blocks_for(instance)

@pytest.fixture(scope="module")
def four_bidders():
    """Two middle bidders: d=8, eps=0.01, K=2."""
    return build_hard_instance(4, BalancedSpec(0.01, 8, 2), Z_DEFAULT)

def random_mechanism(instance, blocks, rng):
    """A random convex combination of valid mechanisms, so it is valid too."""
    grids = instance.joint_shrunk.grids
    parts = [blocks["explicit"], blocks["lookahead"], blocks["zero"]]
    for bidder in range(1, instance.n - 1):
        parts.append(posted_price_mechanism(grids, bidder, int(rng.integers(0, len(grids[bidder])))))
    parts.append(posted_price_mechanism(grids, 0, int(rng.integers(0, instance.family.m))))
    return mixture(parts, rng.dirichlet(np.ones(len(parts))))

def assert_threshold_payments(mech):
    assert np.abs(myerson_payments(mech.alloc, mech.grids) - mech.pay).max() <= 1e-9

def assert_only_unreachable_residual(report, inst):
    kept = report.mechanism.alloc[1:] * inst.shrunk_support[np.newaxis, ...]
    assert kept[~report.unreachable].max(initial=0.0) <= 1e-9
    assert report.stray <= 1e-9
    assert report.residual == pytest.approx(float(kept.sum()))

def test_high_priced_transform_on_a_low_posted_price(instance):
    dist = instance.joint_shrunk
    mech = posted_price_mechanism(dist.grids, 0, 0)
    output = high_priced_transform(mech, instance)
    assert is_high_priced(output, instance)
    assert validate_mechanism(output, dist).ok
    assert expected_revenue(output, dist) == pytest.approx(instance.family.z, abs=1e-12)
    assert expected_revenue(mech, dist) == pytest.approx(instance.family.z, abs=1e-12)

def test_shift_moves_a_middle_posted_price_onto_bidder_one(instance):
    dist = instance.joint_shrunk
    mech = high_priced_transform(posted_price_mechanism(dist.grids, 1, 0), instance)
    report = shift_report(mech, instance)
    output = report.mechanism
    assert report.fix_count > 0
    assert validate_mechanism(output, dist).ok
    assert expected_revenue(output, dist) >= expected_revenue(mech, dist) - 1e-9
    for fix in report.fixes:
        for i in fix.context.I:
            assert fix.gain[i] > fix.loss[i]
        assert fix.context.y == fix.context.v_prime[0]
        assert instance.h_of(fix.context.v_prime[1:]) == fix.context.y

def test_shift_leaves_nothing_to_change_without_problematic_profiles(instance, building_blocks):
    mech = building_blocks["explicit"]
    report = shift_report(mech, instance)
    assert report.fix_count == 0
    assert report.blocked == []
    assert report.residual == 0.0
    assert np.array_equal(report.mechanism.alloc, mech.alloc)
    assert report.mechanism is not mech

def test_shift_requires_a_high_priced_mechanism(instance):
    mech = posted_price_mechanism(instance.joint_shrunk.grids, 0, 0)
    with pytest.raises(NotHighPriced):
        shift_transform(mech, instance)

def test_transforms_require_the_shrunken_market(instance):
    full = Mechanism.zero(instance.joint_n.grids)
    with pytest.raises(GridMismatch):
        high_priced_transform(full, instance)
    with pytest.raises(GridMismatch):
        shift_transform(full, instance)

def test_transforms_preserve_validity_and_revenue_on_random_mechanisms(instance, building_blocks):
    rng = np.random.default_rng(7)
    dist = instance.joint_shrunk
    d, K = instance.params.d, instance.params.trunc_blocks
    # Middle positions in the last retained block may keep allocations
    interior = instance.shrunk_support.copy()
    interior[:, (K - 1) * d:] = False
    for _ in range(50):
        mech = random_mechanism(instance, building_blocks, rng)
        assert validate_mechanism(mech, dist).ok
        before = expected_revenue(mech, dist)

        high = high_priced_transform(mech, instance)
        assert is_high_priced(high, instance)
        assert validate_mechanism(high, dist).ok
        assert expected_revenue(high, dist) >= before - 1e-9

        report = shift_report(high, instance)
        shifted = report.mechanism
        assert validate_mechanism(shifted, dist).ok
        assert is_high_priced(shifted, instance)
        assert expected_revenue(shifted, dist) >= expected_revenue(high, dist) - 1e-9
        assert_threshold_payments(high)
        assert_threshold_payments(shifted)
        assert_only_unreachable_residual(report, instance)
        assert shifted.alloc[1][interior].max(initial=0.0) <= 1e-9
        assert all(fix.gain[i] > fix.loss[i] for fix in report.fixes for i in fix.context.I)

def test_unreachable_region_without_blocked_fixes(instance):
    unreachable = unreachable_profiles(instance, [])
    m, size = instance.family.m, instance.params.support_size
    assert unreachable.shape == (1, m, size)
    for j in range(m):
        tops = [s for s in range(size) if instance.h_of((s,)) == j]
        # Reachable exactly up to the last profile on the line where h equals j
        assert not unreachable[0, j, :tops[-1] + 1].any()
        assert unreachable[0, j, tops[-1] + 1:].all()

def test_blocked_fix_makes_the_stretch_below_it_unreachable(instance):
    size = instance.params.support_size
    top = max(s for s in range(size) if instance.h_of((s,)) == 0)
    below = max(s for s in range(top) if instance.h_of((s,)) == 0)
    unreachable = unreachable_profiles(instance, [(0, top)])
    assert not unreachable[0, 0, :below + 1].any()
    assert unreachable[0, 0, below + 1:].all()

def test_shift_on_four_bidders_clears_everything_a_fix_can_reach(four_bidders):
    dist = four_bidders.joint_shrunk
    mech = high_priced_transform(posted_price_mechanism(dist.grids, 1, 0), four_bidders)
    report = shift_report(mech, four_bidders)
    output = report.mechanism
    assert report.fix_count > 0
    assert validate_mechanism(output, dist).ok
    assert is_high_priced(output, four_bidders)
    assert expected_revenue(output, dist) >= expected_revenue(mech, dist) - 1e-9
    assert_threshold_payments(output)
    assert_only_unreachable_residual(report, four_bidders)
    assert report.unreachable.shape == (2, four_bidders.family.m, 16, 16)
    for fix in report.fixes:
        assert all(fix.gain[i] > fix.loss[i] for i in fix.context.I)
        assert four_bidders.h_of(fix.context.v_prime[1:]) == fix.context.y

def test_transforms_on_four_bidders_with_random_mechanisms(four_bidders):
    rng = np.random.default_rng(11)
    dist = four_bidders.joint_shrunk
    blocks = blocks_for(four_bidders)
    for _ in range(15):
        mech = random_mechanism(four_bidders, blocks, rng)
        assert validate_mechanism(mech, dist).ok
        high = high_priced_transform(mech, four_bidders)
        assert validate_mechanism(high, dist).ok
        assert expected_revenue(high, dist) >= expected_revenue(mech, dist) - 1e-9
        assert_threshold_payments(high)

        report = shift_report(high, four_bidders)
        shifted = report.mechanism
        assert validate_mechanism(shifted, dist).ok
        assert expected_revenue(shifted, dist) >= expected_revenue(high, dist) - 1e-9
        assert_threshold_payments(shifted)
        assert_only_unreachable_residual(report, four_bidders)
