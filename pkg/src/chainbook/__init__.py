"""chainbook: blockchain order-book market simulator and solver suite.

Buyers and sellers set transaction fees; fee-maximizing miners match and
confirm them under a block-size cap; a system designer tunes that cap to
protect social welfare.  The package provides the market model, the miner
engine, the fee-setting equilibria, welfare accounting with an exact
optimum oracle, block-size mechanisms, and a reproducible experiment
harness with a CLI.
"""

from .market import (
    Buyer,
    FeeProfile,
    MarketInstance,
    MatchTrace,
    Miner,
    MinerPolicy,
    Seller,
    build_instance,
    buyer_payoff,
    feasible_matching_exists,
    miner_round_payoff,
    pair_surplus,
    seller_payoff,
)
from .miners import PendingPool, Selection, recommend_matching, run_horizon, run_round, selfish_select
from .equilibrium import (
    MixedStrategy,
    ThresholdFees,
    crossing_index,
    expected_total_cost,
    msne,
    psne,
    sample_fee,
    threshold_fees,
    verify_equilibrium,
)
from .welfare import (
    WelfareReport,
    performance_ratio,
    social_optimum,
    social_welfare,
    unbounded_poa_witness,
)
from .distributions import ValueDistribution, fit_empirical
from .mechanism import (
    MechanismConfig,
    optimal_block_size_capped,
    optimal_block_size_complete,
    optimal_block_size_distributional,
    solve_eta,
)
from .datasets import OrderDataset, ingest_csv

__version__ = "0.1.0"

__all__ = [
    "Buyer",
    "Seller",
    "Miner",
    "MinerPolicy",
    "MarketInstance",
    "FeeProfile",
    "MatchTrace",
    "build_instance",
    "pair_surplus",
    "buyer_payoff",
    "seller_payoff",
    "miner_round_payoff",
    "feasible_matching_exists",
    "PendingPool",
    "Selection",
    "selfish_select",
    "recommend_matching",
    "run_round",
    "run_horizon",
    "crossing_index",
    "ThresholdFees",
    "threshold_fees",
    "psne",
    "msne",
    "MixedStrategy",
    "expected_total_cost",
    "sample_fee",
    "verify_equilibrium",
    "WelfareReport",
    "social_welfare",
    "social_optimum",
    "performance_ratio",
    "unbounded_poa_witness",
    "ValueDistribution",
    "fit_empirical",
    "MechanismConfig",
    "solve_eta",
    "optimal_block_size_complete",
    "optimal_block_size_distributional",
    "optimal_block_size_capped",
    "OrderDataset",
    "ingest_csv",
    "__version__",
]
