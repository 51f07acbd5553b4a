"""Welfare accounting, the exact optimum oracle, ratios, and witnesses."""

import itertools
import math

import numpy as np
import pytest

from chainbook.equilibrium import equilibrium_profile
from chainbook.market import FeeProfile, MatchTrace, RoundRecord, build_instance
from chainbook.miners import run_horizon
from chainbook.welfare import (
    performance_ratio,
    social_optimum,
    social_welfare,
    unbounded_poa_witness,
)


def _trace(*rounds):
    return MatchTrace(
        rounds=tuple(
            RoundRecord(block=block, winner_id=0, pairs=tuple(pairs))
            for block, pairs in rounds
        )
    )


def test_social_welfare_single_block():
    inst = build_instance([0.9, 0.8], [0.1, 0.2], block_size=2, delay_cost=0.3)
    profile = FeeProfile(buy_fees=(0.05, 0.04), sell_fees=(0.03, 0.02))
    report = social_welfare(inst, _trace((1, [(0, 0), (1, 1)])), profile)
    assert report.sw == pytest.approx(1.4)
    assert report.matched_surplus == pytest.approx(1.4)
    assert report.delay_total == 0.0
    assert report.fee_total == pytest.approx(0.14)


def test_social_welfare_with_delayed_pair():
    inst = build_instance([0.9, 0.8], [0.1, 0.2], block_size=1, delay_cost=0.3)
    profile = FeeProfile(buy_fees=(0.05, 0.04), sell_fees=(0.03, 0.02))
    report = social_welfare(inst, _trace((1, [(0, 0)]), (2, [(1, 1)])), profile)
    assert report.sw == pytest.approx(1.4 - 2 * 0.3)  # both sides of the pair wait


def test_social_welfare_no_matches():
    inst = build_instance([0.9], [0.1], block_size=1)
    report = social_welfare(inst, _trace(), FeeProfile(buy_fees=(0.1,), sell_fees=(0.1,)))
    assert report.sw == 0.0


def test_fees_cancel_in_welfare():
    rng = np.random.default_rng(14)
    for _ in range(40):
        k, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        inst = build_instance(
            rng.random(k),
            rng.random(n),
            block_size=int(rng.integers(1, 4)),
            buy_quantities=1 + rng.random(k),
            sell_quantities=1 + rng.random(n),
            delay_cost=0.05,
        )
        profile = FeeProfile(buy_fees=tuple(rng.random(k)), sell_fees=tuple(rng.random(n)))
        trace = run_horizon(inst, profile, rng)
        report = social_welfare(inst, trace, profile)
        assert report.sw == pytest.approx(
            report.matched_surplus - report.delay_total, abs=1e-9
        )


def test_social_optimum_examples():
    assert social_optimum(build_instance([0.9, 0.3], [0.1, 0.5], 1)) == pytest.approx(0.8)
    assert social_optimum(build_instance([0.2], [0.5], 1)) == 0.0
    assert social_optimum(
        build_instance([0.9], [0.1], 1, buy_quantities=[2.0], sell_quantities=[3.0])
    ) == pytest.approx(1.6)


def _brute_force_optimum(inst):
    k, n = inst.num_buyers, inst.num_sellers
    best = 0.0
    big = max(k, n)
    buyers = list(range(k)) + [None] * (big - k)
    for perm in itertools.permutations(range(n) if n == big else list(range(n)) + [None] * (big - n)):
        total = 0.0
        for b, s in zip(buyers, perm):
            if b is None or s is None:
                continue
            buyer, seller = inst.buyers[b], inst.sellers[s]
            if buyer.utility >= seller.cost:
                gain = min(buyer.quantity, seller.quantity) * (buyer.utility - seller.cost)
                total += max(gain, 0.0)
        best = max(best, total)
    return best


def test_social_optimum_matches_permutation_brute_force():
    rng = np.random.default_rng(23)
    for _ in range(120):
        k, n = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        inst = build_instance(
            rng.random(k),
            rng.random(n),
            block_size=1,
            buy_quantities=1 + 2 * rng.random(k),
            sell_quantities=1 + 2 * rng.random(n),
        )
        assert social_optimum(inst) == pytest.approx(_brute_force_optimum(inst), abs=1e-12)


def test_homogeneous_fast_path_matches_assignment():
    rng = np.random.default_rng(29)
    for _ in range(60):
        k, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        qty = float(1 + rng.random())
        inst = build_instance(
            rng.random(k),
            rng.random(n),
            block_size=1,
            buy_quantities=[qty] * k,
            sell_quantities=[qty] * n,
        )
        assert social_optimum(inst) == pytest.approx(_brute_force_optimum(inst), abs=1e-12)


def test_performance_ratio_optimal_block_is_exact():
    inst = build_instance([0.9, 0.8, 0.5], [0.1, 0.2, 0.7], block_size=1, delay_cost=0.1)
    report = performance_ratio(inst, mechanism_block_size=2, mc_replications=4, rng_seed=0)
    assert report.ratio == pytest.approx(1.0, abs=1e-9)
    assert report.sw == pytest.approx(report.sw_opt, abs=1e-9)


def test_performance_ratio_oversized_block():
    # One star pair plus one barely-compatible cross pair: the fee-stacked
    # block burns most of the gain from trade.
    inst = build_instance([0.9, 0.3], [0.1, 0.5], block_size=2)
    report = performance_ratio(inst, mechanism_block_size=2, mc_replications=4, rng_seed=1)
    assert report.sw == pytest.approx(0.6, abs=1e-12)
    assert report.ratio == pytest.approx(0.8 / 0.6, abs=1e-9)


def test_performance_ratio_undersized_block():
    total = 1.4
    d = 0.5 * total * (1 - 1e-3)  # just below half the surplus
    inst = build_instance([0.9, 0.8], [0.1, 0.2], block_size=1, delay_cost=d, horizon=2)
    report = performance_ratio(inst, mechanism_block_size=1, mc_replications=4, rng_seed=2)
    assert report.ratio > 500.0


def test_performance_ratio_infinite_flag():
    total = 1.4
    inst = build_instance(
        [0.9, 0.8], [0.1, 0.2], block_size=1, delay_cost=0.5 * total * 1.2, horizon=2
    )
    report = performance_ratio(inst, mechanism_block_size=1, mc_replications=4, rng_seed=3)
    assert report.sw < 0.0
    assert math.isinf(report.ratio)


def test_performance_ratio_empty_market_is_neutral():
    inst = build_instance([0.2], [0.5], block_size=1)
    report = performance_ratio(inst, mechanism_block_size=1, mc_replications=2, rng_seed=4)
    assert report.sw == 0.0
    assert report.sw_opt == 0.0
    assert report.ratio == 1.0


@pytest.mark.parametrize("target", [10.0, 100.0])
def test_witness_instances_reach_target(target):
    high, low = unbounded_poa_witness(target)

    high_report = performance_ratio(high, high.block_size, mc_replications=4, rng_seed=5)
    closed_form_high = (high.buyers[0].utility - high.sellers[0].cost) / (
        high.buyers[0].utility
        + high.buyers[1].utility
        - high.sellers[0].cost
        - high.sellers[1].cost
    )
    assert high_report.ratio >= target - 1e-9
    assert high_report.ratio == pytest.approx(closed_form_high, rel=1e-6)

    low_report = performance_ratio(low, low.block_size, mc_replications=4, rng_seed=6)
    total = sum(b.utility for b in low.buyers) - sum(s.cost for s in low.sellers)
    closed_form_low = total / (total - 2 * low.delay_cost)
    assert low_report.ratio >= target - 1e-9
    assert low_report.ratio == pytest.approx(closed_form_low, rel=1e-6)


def test_witness_target_one_is_trivial():
    high, low = unbounded_poa_witness(1.0)
    for inst in (high, low):
        report = performance_ratio(inst, inst.block_size, mc_replications=4, rng_seed=7)
        assert report.ratio >= 1.0 - 1e-9
    with pytest.raises(ValueError):
        unbounded_poa_witness(0.5)


def test_ratio_at_least_one_on_random_instances():
    rng = np.random.default_rng(31)
    for _ in range(25):
        k, n = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        inst = build_instance(
            rng.random(k), rng.random(n), block_size=1, delay_cost=0.0
        )
        a = int(rng.integers(1, 4))
        report = performance_ratio(inst, a, mc_replications=30, rng_seed=int(rng.integers(1 << 30)))
        if report.sw > 0:
            assert report.ratio >= 1.0 - 1e-9


def test_equilibrium_profile_dispatch():
    pure_inst = build_instance([0.9, 0.3], [0.1, 0.5], block_size=1)
    mixed_inst = build_instance([0.9, 0.8], [0.1, 0.2], block_size=1, delay_cost=0.1, horizon=2)
    assert equilibrium_profile(pure_inst, 0) is not None
    profile = equilibrium_profile(mixed_inst, 0)
    assert all(f > 0 for f in profile.buy_fees)
