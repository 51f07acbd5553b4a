"""Core market model: participants, payoffs, and matching feasibility.

Buyers post purchase orders (per-unit utility R in [0, 1], quantity b) and
sellers post sale orders (per-unit cost C in [0, 1], quantity q).  A matched
pair trades min(b, q) units at the mid price (R + C) / 2, so the gain from
trade splits equally.  Transactions are confirmed by miners in blocks of up
to ``block_size`` pairs; a transaction confirmed in block l bears a delay
cost of (l - 1) * d.

All types are immutable after construction and all operations are pure
functions, so they are safe to use concurrently without coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .miners import Selection

__all__ = [
    "MinerPolicy",
    "Buyer",
    "Seller",
    "Miner",
    "MarketInstance",
    "FeeProfile",
    "MatchedPair",
    "RoundRecord",
    "MatchTrace",
    "pair_surplus",
    "buyer_payoff",
    "seller_payoff",
    "miner_round_payoff",
    "rank_feasible",
    "feasible_matching_exists",
    "build_instance",
    "single_selfish_miner",
    "miners_with_protocol_share",
]


class MinerPolicy(Enum):
    """How a miner fills its block."""

    SELFISH = "selfish"
    PROTOCOL_FOLLOWING = "protocol_following"


@dataclass(frozen=True)
class Buyer:
    """A buy order: per-unit utility ``utility`` for ``quantity`` units."""

    id: int
    utility: float
    quantity: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.utility <= 1.0:
            raise ValueError(f"buyer {self.id}: utility {self.utility} outside [0, 1]")
        if self.quantity <= 0.0:
            raise ValueError(f"buyer {self.id}: quantity must be positive")


@dataclass(frozen=True)
class Seller:
    """A sell order: per-unit cost ``cost`` for ``quantity`` units."""

    id: int
    cost: float
    quantity: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.cost <= 1.0:
            raise ValueError(f"seller {self.id}: cost {self.cost} outside [0, 1]")
        if self.quantity <= 0.0:
            raise ValueError(f"seller {self.id}: quantity must be positive")


@dataclass(frozen=True)
class Miner:
    """A miner with win probability ``power`` and a block-filling policy."""

    id: int
    power: float
    policy: MinerPolicy = MinerPolicy.SELFISH

    def __post_init__(self) -> None:
        if not 0.0 <= self.power <= 1.0:
            raise ValueError(f"miner {self.id}: power {self.power} outside [0, 1]")


@dataclass(frozen=True)
class MarketInstance:
    """A complete market parameterization.

    ``block_size`` counts buyer/seller *pairs* per block (2A transactions).
    ``horizon`` defaults to the smallest number of blocks that could record
    every possible pair, ceil(min(K, N) / A).
    """

    buyers: tuple[Buyer, ...]
    sellers: tuple[Seller, ...]
    miners: tuple[Miner, ...]
    block_size: int
    delay_cost: float = 0.0
    fee_unit: float = 1e-6
    horizon: int | None = None

    def __post_init__(self) -> None:
        if len(self.buyers) < 1 or len(self.sellers) < 1:
            raise ValueError("need at least one buyer and one seller")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.delay_cost < 0.0:
            raise ValueError("delay_cost must be nonnegative")
        if self.fee_unit <= 0.0:
            raise ValueError("fee_unit must be positive")
        if not self.miners:
            raise ValueError("need at least one miner")
        total_power = math.fsum(m.power for m in self.miners)
        if abs(total_power - 1.0) > 1e-12:
            raise ValueError(f"miner powers sum to {total_power}, expected 1")
        min_side = min(len(self.buyers), len(self.sellers))
        floor_horizon = math.ceil(min_side / self.block_size)
        if self.horizon is None:
            object.__setattr__(self, "horizon", floor_horizon)
        elif self.horizon < floor_horizon:
            raise ValueError(
                f"horizon {self.horizon} too short to record all pairs "
                f"(needs >= {floor_horizon})"
            )

    @property
    def num_buyers(self) -> int:
        return len(self.buyers)

    @property
    def num_sellers(self) -> int:
        return len(self.sellers)

    def utilities(self) -> np.ndarray:
        return np.array([b.utility for b in self.buyers])

    def buy_quantities(self) -> np.ndarray:
        return np.array([b.quantity for b in self.buyers])

    def costs(self) -> np.ndarray:
        return np.array([s.cost for s in self.sellers])

    def sell_quantities(self) -> np.ndarray:
        return np.array([s.quantity for s in self.sellers])

    def with_block_size(self, block_size: int) -> "MarketInstance":
        """Same market under a different block size (horizon re-derived)."""
        return replace(self, block_size=block_size, horizon=None)


def build_instance(
    utilities: Sequence[float],
    costs: Sequence[float],
    block_size: int,
    buy_quantities: Sequence[float] | None = None,
    sell_quantities: Sequence[float] | None = None,
    miners: Sequence[Miner] | None = None,
    delay_cost: float = 0.0,
    fee_unit: float = 1e-6,
    horizon: int | None = None,
) -> MarketInstance:
    """Assemble a MarketInstance from plain value arrays (unit quantities by default)."""
    if buy_quantities is None:
        buy_quantities = [1.0] * len(utilities)
    if sell_quantities is None:
        sell_quantities = [1.0] * len(costs)
    buyers = tuple(
        Buyer(id=i, utility=float(r), quantity=float(b))
        for i, (r, b) in enumerate(zip(utilities, buy_quantities, strict=True))
    )
    sellers = tuple(
        Seller(id=i, cost=float(c), quantity=float(q))
        for i, (c, q) in enumerate(zip(costs, sell_quantities, strict=True))
    )
    if miners is None:
        miners = single_selfish_miner()
    return MarketInstance(
        buyers=buyers,
        sellers=sellers,
        miners=tuple(miners),
        block_size=block_size,
        delay_cost=delay_cost,
        fee_unit=fee_unit,
        horizon=horizon,
    )


def single_selfish_miner() -> tuple[Miner, ...]:
    return (Miner(id=0, power=1.0, policy=MinerPolicy.SELFISH),)


def miners_with_protocol_share(protocol_share: float, num_selfish: int = 4) -> tuple[Miner, ...]:
    """A small miner set whose protocol-following power share equals ``protocol_share``.

    Per-block selections depend only on policy, not on miner identity, so a
    compact set with the right power split stands in for an arbitrarily large
    population.
    """
    if not 0.0 <= protocol_share <= 1.0:
        raise ValueError("protocol_share must lie in [0, 1]")
    miners: list[Miner] = []
    selfish_power = 1.0 - protocol_share
    if selfish_power > 0.0:
        for i in range(num_selfish):
            miners.append(Miner(id=i, power=selfish_power / num_selfish, policy=MinerPolicy.SELFISH))
    if protocol_share > 0.0:
        miners.append(
            Miner(id=len(miners), power=protocol_share, policy=MinerPolicy.PROTOCOL_FOLLOWING)
        )
    return tuple(miners)


@dataclass(frozen=True)
class FeeProfile:
    """One transaction fee per buyer and per seller (by participant index)."""

    buy_fees: tuple[float, ...]
    sell_fees: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(f < 0.0 for f in self.buy_fees) or any(f < 0.0 for f in self.sell_fees):
            raise ValueError("fees must be nonnegative")

    def quantized(self, fee_unit: float) -> "FeeProfile":
        """Round every fee to the nearest integer multiple of ``fee_unit``."""
        return FeeProfile(
            buy_fees=tuple(round(f / fee_unit) * fee_unit for f in self.buy_fees),
            sell_fees=tuple(round(f / fee_unit) * fee_unit for f in self.sell_fees),
        )

    def with_buy_fee(self, index: int, fee: float) -> "FeeProfile":
        fees = list(self.buy_fees)
        fees[index] = fee
        return FeeProfile(buy_fees=tuple(fees), sell_fees=self.sell_fees)

    def with_sell_fee(self, index: int, fee: float) -> "FeeProfile":
        fees = list(self.sell_fees)
        fees[index] = fee
        return FeeProfile(buy_fees=self.buy_fees, sell_fees=tuple(fees))


@dataclass(frozen=True)
class MatchedPair:
    buyer_id: int
    seller_id: int
    block: int


@dataclass(frozen=True)
class RoundRecord:
    """Outcome of one mining round: who won and what got included."""

    block: int
    winner_id: int
    pairs: tuple[tuple[int, int], ...]
    selections: Mapping[int, "Selection"] = field(default_factory=dict)


@dataclass(frozen=True)
class MatchTrace:
    """Per-round record of selections and matches over a full horizon."""

    rounds: tuple[RoundRecord, ...]

    def matched_pairs(self) -> list[MatchedPair]:
        return [
            MatchedPair(buyer_id=b, seller_id=s, block=r.block)
            for r in self.rounds
            for (b, s) in r.pairs
        ]

    def matched_buyer_blocks(self) -> dict[int, int]:
        return {p.buyer_id: p.block for p in self.matched_pairs()}

    def matched_seller_blocks(self) -> dict[int, int]:
        return {p.seller_id: p.block for p in self.matched_pairs()}

    def validate(self, instance: MarketInstance) -> None:
        """Check structural invariants against the originating instance."""
        seen_buyers: set[int] = set()
        seen_sellers: set[int] = set()
        for rec in self.rounds:
            if len(rec.pairs) > instance.block_size:
                raise ValueError(f"block {rec.block} holds {len(rec.pairs)} pairs > block size")
            for buyer_id, seller_id in rec.pairs:
                if buyer_id in seen_buyers or seller_id in seen_sellers:
                    raise ValueError("participant matched more than once")
                seen_buyers.add(buyer_id)
                seen_sellers.add(seller_id)
                buyer = instance.buyers[buyer_id]
                seller = instance.sellers[seller_id]
                if buyer.utility < seller.cost:
                    raise ValueError(
                        f"infeasible match: R={buyer.utility} < C={seller.cost}"
                    )


def pair_surplus(buyer: Buyer, seller: Seller) -> tuple[float, float, float]:
    """Surpluses of a matched pair trading min(b, q) units at the mid price.

    Returns ``(buy_surplus, sell_surplus, trade_qty)``.  The two surpluses
    always sum to ``trade_qty * (R - C)`` exactly: the mid price splits the
    gain from trade equally.
    """
    qty = min(buyer.quantity, seller.quantity)
    mid = (buyer.utility + seller.cost) / 2.0
    return qty * (buyer.utility - mid), qty * (mid - seller.cost), qty


def buyer_payoff(
    buyer: Buyer,
    fee: float,
    matched: bool,
    inclusion_block: int | None = None,
    paired_seller: Seller | None = None,
    delay_cost: float = 0.0,
) -> float:
    """Realized payoff of a buyer: surplus minus fee minus per-block delay.

    An unmatched buyer pays nothing and bears no delay, so the payoff is 0.
    """
    if not matched:
        return 0.0
    if inclusion_block is None or paired_seller is None:
        raise ValueError("matched buyer needs an inclusion block and a paired seller")
    surplus, _, _ = pair_surplus(buyer, paired_seller)
    return surplus - fee - (inclusion_block - 1) * delay_cost


def seller_payoff(
    seller: Seller,
    fee: float,
    matched: bool,
    inclusion_block: int | None = None,
    paired_buyer: Buyer | None = None,
    delay_cost: float = 0.0,
) -> float:
    """Mirror of :func:`buyer_payoff` with the seller-side surplus."""
    if not matched:
        return 0.0
    if inclusion_block is None or paired_buyer is None:
        raise ValueError("matched seller needs an inclusion block and a paired buyer")
    _, surplus, _ = pair_surplus(paired_buyer, seller)
    return surplus - fee - (inclusion_block - 1) * delay_cost


def miner_round_payoff(selected_fees: Iterable[float], power: float) -> float:
    """Expected fee revenue of one miner for one block: power * sum(fees)."""
    return power * math.fsum(selected_fees)


def rank_feasible(utilities: np.ndarray, costs: np.ndarray) -> bool:
    """True iff equal-size value arrays admit a perfect matching with R >= C.

    Sorting both sides ascending and requiring elementwise dominance is the
    Hall condition for this threshold-compatibility graph.
    """
    r = np.sort(np.asarray(utilities, dtype=float))
    c = np.sort(np.asarray(costs, dtype=float))
    if r.shape != c.shape:
        raise ValueError("need equally many utilities and costs")
    if r.size == 0:
        return True
    return bool(np.all(r >= c))


def feasible_matching_exists(
    buyer_utils: Sequence[float], seller_costs: Sequence[float]
) -> bool:
    """True iff a one-to-one matching with R >= C on every pair exists."""
    if len(buyer_utils) != len(seller_costs):
        raise ValueError(
            f"length mismatch: {len(buyer_utils)} utilities vs {len(seller_costs)} costs"
        )
    return rank_feasible(np.asarray(buyer_utils), np.asarray(seller_costs))
