"""Market-core tests: surpluses, payoffs, feasibility, structural invariants."""

import itertools

import numpy as np
import pytest

from chainbook.market import (
    Buyer,
    FeeProfile,
    MarketInstance,
    Miner,
    Seller,
    build_instance,
    buyer_payoff,
    feasible_matching_exists,
    miner_round_payoff,
    pair_surplus,
    seller_payoff,
)


def test_pair_surplus_unit_quantities():
    buy, sell, qty = pair_surplus(Buyer(0, 0.9, 1.0), Seller(0, 0.1, 1.0))
    assert qty == 1.0
    assert buy == pytest.approx(0.4)
    assert sell == pytest.approx(0.4)


def test_pair_surplus_zero_at_equal_values():
    for value, b, q in [(0.3, 1.0, 2.0), (0.7, 5.0, 1.5)]:
        buy, sell, _ = pair_surplus(Buyer(0, value, b), Seller(0, value, q))
        assert buy == 0.0
        assert sell == 0.0


def test_pair_surplus_scales_with_min_quantity():
    buy, sell, qty = pair_surplus(Buyer(0, 0.9, 2.0), Seller(0, 0.1, 3.0))
    assert qty == 2.0
    assert buy == pytest.approx(0.8)
    assert sell == pytest.approx(0.8)


def test_mid_price_splits_gain_exactly():
    rng = np.random.default_rng(3)
    for _ in range(200):
        buyer = Buyer(0, rng.random(), 1.0 + 2.0 * rng.random())
        seller = Seller(0, rng.random(), 1.0 + 2.0 * rng.random())
        buy, sell, qty = pair_surplus(buyer, seller)
        assert buy + sell == pytest.approx(
            qty * (buyer.utility - seller.cost), abs=1e-15
        )


def test_buyer_payoff_first_block():
    buyer = Buyer(0, 0.9, 1.0)
    seller = Seller(0, 0.1, 1.0)
    assert buyer_payoff(buyer, 0.1, True, 1, seller, 0.3) == pytest.approx(0.3)


def test_buyer_payoff_one_block_delay():
    buyer = Buyer(0, 0.9, 1.0)
    seller = Seller(0, 0.1, 1.0)
    assert buyer_payoff(buyer, 0.1, True, 2, seller, 0.3) == pytest.approx(0.0)


def test_unmatched_payoffs_are_zero():
    assert buyer_payoff(Buyer(0, 0.9), 0.5, False) == 0.0
    assert seller_payoff(Seller(0, 0.1), 0.5, False) == 0.0


def test_seller_payoff_mirrors_buyer():
    buyer = Buyer(0, 0.9, 1.0)
    seller = Seller(0, 0.1, 1.0)
    assert seller_payoff(seller, 0.05, True, 1, buyer, 0.3) == pytest.approx(0.35)
    assert seller_payoff(seller, 0.05, True, 3, buyer, 0.1) == pytest.approx(0.15)


def test_payoff_decomposition():
    # buyer payoff + seller payoff + pair fees == qty * (R - C) - both delay terms
    rng = np.random.default_rng(11)
    for _ in range(100):
        buyer = Buyer(0, rng.random(), 1 + rng.random())
        seller = Seller(0, rng.random(), 1 + rng.random())
        bfee, sfee = rng.random(), rng.random()
        block = int(rng.integers(1, 4))
        d = rng.random() * 0.2
        total = (
            buyer_payoff(buyer, bfee, True, block, seller, d)
            + seller_payoff(seller, sfee, True, block, buyer, d)
            + bfee
            + sfee
        )
        qty = min(buyer.quantity, seller.quantity)
        expected = qty * (buyer.utility - seller.cost) - 2 * (block - 1) * d
        assert total == pytest.approx(expected, abs=1e-12)


def test_miner_round_payoff():
    assert miner_round_payoff([5, 3, 4, 1], 0.2) == pytest.approx(2.6)
    assert miner_round_payoff([], 0.7) == 0.0
    assert miner_round_payoff([1e-6], 1.0) == pytest.approx(1e-6)


def test_feasibility_examples():
    assert feasible_matching_exists([0.9, 0.8], [0.1, 0.2])
    assert not feasible_matching_exists([0.9], [0.95])
    assert feasible_matching_exists([0.5, 0.9], [0.6, 0.1])


def test_feasibility_length_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        feasible_matching_exists([0.5, 0.9], [0.6])


def _brute_force_feasible(utils, costs):
    return any(
        all(r >= c for r, c in zip(utils, perm))
        for perm in itertools.permutations(costs)
    )


def test_feasibility_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(400):
        n = int(rng.integers(1, 7))
        utils = rng.random(n).tolist()
        costs = rng.random(n).tolist()
        assert feasible_matching_exists(utils, costs) == _brute_force_feasible(utils, costs)


def test_participant_validation():
    with pytest.raises(ValueError):
        Buyer(0, 1.2, 1.0)
    with pytest.raises(ValueError):
        Seller(0, -0.1, 1.0)
    with pytest.raises(ValueError):
        Buyer(0, 0.5, 0.0)
    with pytest.raises(ValueError):
        Miner(0, 1.5)


def test_instance_power_and_horizon_validation():
    buyers = (Buyer(0, 0.9), Buyer(1, 0.8), Buyer(2, 0.7))
    sellers = (Seller(0, 0.1), Seller(1, 0.2))
    bad_miners = (Miner(0, 0.5), Miner(1, 0.4))
    with pytest.raises(ValueError, match="powers"):
        MarketInstance(buyers, sellers, bad_miners, block_size=1)
    good_miners = (Miner(0, 0.5), Miner(1, 0.5))
    inst = MarketInstance(buyers, sellers, good_miners, block_size=1)
    assert inst.horizon == 2  # ceil(min(3, 2) / 1)
    with pytest.raises(ValueError, match="horizon"):
        MarketInstance(buyers, sellers, good_miners, block_size=1, horizon=1)


def test_fee_profile_quantization():
    profile = FeeProfile(buy_fees=(0.1234, 0.0), sell_fees=(0.077,))
    quant = profile.quantized(0.01)
    assert quant.buy_fees == pytest.approx((0.12, 0.0))
    assert quant.sell_fees == pytest.approx((0.08,))
    with pytest.raises(ValueError):
        FeeProfile(buy_fees=(-0.1,), sell_fees=())


def test_build_instance_roundtrip():
    inst = build_instance(
        utilities=[0.9, 0.4],
        costs=[0.1, 0.3, 0.5],
        block_size=2,
        buy_quantities=[2.0, 1.0],
        delay_cost=0.05,
    )
    assert inst.num_buyers == 2
    assert inst.num_sellers == 3
    assert inst.utilities().tolist() == [0.9, 0.4]
    assert inst.sell_quantities().tolist() == [1.0, 1.0, 1.0]
    resized = inst.with_block_size(1)
    assert resized.block_size == 1
    assert resized.horizon == 2
