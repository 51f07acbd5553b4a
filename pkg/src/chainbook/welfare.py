"""Social welfare accounting, the exact social optimum, and worst-case ratios.

Social welfare is the sum of all buyer, seller, and miner payoffs.  Fees are
pure transfers from participants to the winning miners, so realized welfare
reduces to matched surplus minus delay costs.  The social optimum is free to
use one arbitrarily large block, which kills the delay term and reduces the
problem to a maximum-weight bipartite matching with edge weight
min(b, q) * (R - C) over compatible pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .market import (
    FeeProfile,
    MarketInstance,
    MatchTrace,
    build_instance,
    buyer_payoff,
    miner_round_payoff,
    seller_payoff,
)
from .miners import run_horizon
from . import equilibrium as eq

__all__ = [
    "WelfareReport",
    "social_welfare",
    "social_optimum",
    "performance_ratio",
    "unbounded_poa_witness",
]


@dataclass(frozen=True)
class WelfareReport:
    """Realized welfare, its components, and (optionally) the optimum and ratio.

    ``ratio`` is the anarchy-style quotient sw_opt / sw (>= 1 on-model); the
    harness separately reports the performance quotient sw / sw_opt (<= 1).
    """

    sw: float
    matched_surplus: float
    delay_total: float
    fee_total: float
    sw_opt: float | None = None
    ratio: float | None = None
    sw_stderr: float = 0.0
    sw_min: float | None = None
    sw_max: float | None = None
    replications: int = 1


def social_welfare(
    instance: MarketInstance, trace: MatchTrace, profile: FeeProfile
) -> WelfareReport:
    """Sum all participant payoffs plus the miners' realized fee revenue.

    The winning miner of each round collects exactly the fees the matched
    participants pay, so the fee terms cancel and sw also equals matched
    surplus minus both sides' delay costs (reported as components).
    """
    payoffs = []
    fee_total = 0.0
    surplus_total = 0.0
    delay_total = 0.0
    d = instance.delay_cost
    for rec in trace.rounds:
        round_fees = []
        for buyer_id, seller_id in rec.pairs:
            buyer = instance.buyers[buyer_id]
            seller = instance.sellers[seller_id]
            bfee = profile.buy_fees[buyer_id]
            sfee = profile.sell_fees[seller_id]
            payoffs.append(
                buyer_payoff(buyer, bfee, True, rec.block, seller, d)
                + seller_payoff(seller, sfee, True, rec.block, buyer, d)
            )
            round_fees.extend((bfee, sfee))
            qty = min(buyer.quantity, seller.quantity)
            surplus_total += qty * (buyer.utility - seller.cost)
            delay_total += 2 * (rec.block - 1) * d
        payoffs.append(miner_round_payoff(round_fees, 1.0))  # winner takes the block's fees
        fee_total += math.fsum(round_fees)
    sw = math.fsum(payoffs)
    return WelfareReport(
        sw=sw, matched_surplus=surplus_total, delay_total=delay_total, fee_total=fee_total
    )


def social_optimum(instance: MarketInstance) -> float:
    """Exact optimum welfare: max-weight matching, unmatched participants allowed.

    With homogeneous quantities the optimum is assortative, so the positive
    part of the sorted rank differences is summed directly; otherwise an
    assignment solver runs on the zero-clamped weight matrix.
    """
    r = instance.utilities()
    c = instance.costs()
    bq = instance.buy_quantities()
    sq = instance.sell_quantities()

    if np.all(bq == bq[0]) and np.all(sq == sq[0]) and bq[0] == sq[0]:
        qty = float(bq[0])
        r_desc = np.sort(r)[::-1]
        c_asc = np.sort(c)
        m = min(len(r_desc), len(c_asc))
        diffs = r_desc[:m] - c_asc[:m]
        return qty * float(np.sum(diffs[diffs > 0.0]))

    weights = np.minimum(bq[:, None], sq[None, :]) * (r[:, None] - c[None, :])
    weights = np.where(r[:, None] >= c[None, :], weights, 0.0)
    weights = np.maximum(weights, 0.0)
    rows, cols = linear_sum_assignment(weights, maximize=True)
    return float(weights[rows, cols].sum())


def performance_ratio(
    instance: MarketInstance,
    mechanism_block_size: int,
    equilibrium_mode: str = "auto",
    mc_replications: int = 1,
    rng_seed: int = 0,
) -> WelfareReport:
    """Equilibrium welfare under a given block size, against the exact optimum.

    Sets A, computes the stage-one equilibrium (pure when it exists, mixed
    draws otherwise), simulates the horizon per replication, and reports the
    mean realized welfare, the optimum, and their quotient.  A nonpositive
    mean with a positive optimum is flagged as an infinite ratio.
    """
    if equilibrium_mode not in ("auto", "psne", "msne"):
        raise ValueError(f"unknown equilibrium mode {equilibrium_mode!r}")
    inst = instance.with_block_size(mechanism_block_size)
    sw_opt = social_optimum(inst)

    pure = eq.psne(inst) if equilibrium_mode in ("auto", "psne") else None
    if equilibrium_mode == "psne" and pure is None:
        raise ValueError("no pure equilibrium at this block size")
    strategies = None
    if pure is None:
        strategies = eq.msne(inst)

    seeds = np.random.SeedSequence(rng_seed).spawn(mc_replications)
    samples = []
    surplus = delay = fees = 0.0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        profile = pure if pure is not None else eq.realize_profile(inst, strategies, rng)
        trace = run_horizon(inst, profile, rng)
        rep = social_welfare(inst, trace, profile)
        samples.append(rep.sw)
        surplus += rep.matched_surplus
        delay += rep.delay_total
        fees += rep.fee_total

    n = len(samples)
    sw_mean = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    if sw_mean > 0.0:
        ratio = sw_opt / sw_mean
    elif sw_opt <= 1e-15:
        ratio = 1.0  # nothing tradable: both sides of the quotient vanish
    else:
        ratio = math.inf
    return WelfareReport(
        sw=sw_mean,
        matched_surplus=surplus / n,
        delay_total=delay / n,
        fee_total=fees / n,
        sw_opt=sw_opt,
        ratio=ratio,
        sw_stderr=stderr,
        sw_min=float(np.min(samples)),
        sw_max=float(np.max(samples)),
        replications=n,
    )


def unbounded_poa_witness(
    target_ratio: float,
) -> tuple[MarketInstance, MarketInstance]:
    """Two 2x2 unit-quantity markets whose optimum-to-equilibrium ratio hits a target.

    The first drives the ratio up with an oversized block: the fee-ranked
    block pairs the star buyer with the expensive seller, wasting almost the
    whole gain from trade.  The second drives it up with an undersized block:
    half the trades slip to the second block and the delay cost eats almost
    all the surplus.  Both are validated by simulation in the tests.
    """
    if target_ratio < 1.0:
        raise ValueError("target_ratio must be at least 1")

    # Oversized block: C1 < R2 < C2 < R1 with a tiny compatible margin on both
    # cross pairs; ratio = (R1 - C1) / ((R1 - C2) + (R2 - C1)) = target.
    margin = 1.0 / (2.0 * target_ratio)
    c1 = 0.0
    r2 = margin
    r1 = 1.0
    c2 = 1.0 - margin
    high = build_instance(
        utilities=[r1, r2],
        costs=[c1, c2],
        block_size=2,
        delay_cost=0.0,
        fee_unit=min(1e-6, margin * 1e-3),
    )

    # Undersized block: all four orders compatible but only one pair per block;
    # delay just below half the total surplus makes the leftover vanish.
    r = [0.9, 0.8]
    c = [0.1, 0.2]
    total = sum(r) - sum(c)
    d = 0.5 * total * (1.0 - 1.0 / target_ratio)
    low = build_instance(utilities=r, costs=c, block_size=1, delay_cost=d, horizon=2)
    return high, low
