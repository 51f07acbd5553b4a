"""Command-line interface.

Subcommands::

    chainbook ingest      --input orders.csv [--columns bid_price=Bid,...]
    chainbook equilibrium [--config cfg.json] [--block-size A]
    chainbook simulate    [--config cfg.json] [--block-size A]
    chainbook mechanism   [--config cfg.json] [--a-max CAP]
    chainbook poa         --target RATIO
    chainbook experiment  --scenario mechanism_comparison|random_counts|blocksize_limit ...

Global flags (valid on every subcommand): --seed, --config, --out, --format,
--threads.  Reports are deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import equilibrium as eq
from . import experiments as xp
from .datasets import ingest_csv
from .market import build_instance
from .mechanism import (
    capped_search_report,
    optimal_block_size_complete,
    optimal_block_size_distributional,
)
from .reporting import emit_report
from .welfare import performance_ratio, unbounded_poa_witness


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master RNG seed")
    parser.add_argument("--config", type=str, default=None, help="JSON config file")
    parser.add_argument("--out", type=str, default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--threads", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainbook",
        description="Order-book market simulator with fee-maximizing miners and block-size mechanisms",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load an order CSV and fit value distributions")
    p.add_argument("--input", required=True, help="CSV with bid/ask prices and quantities")
    p.add_argument(
        "--columns",
        default=None,
        help="remap columns, e.g. bid_price=BidPrice,ask_price=AskPrice",
    )
    _common_flags(p)

    p = sub.add_parser("equilibrium", help="crossing index, threshold fees, equilibrium kind")
    p.add_argument("--block-size", type=int, default=None, help="override the block size")
    _common_flags(p)

    p = sub.add_parser("simulate", help="simulate one equilibrium play-through")
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--replications", type=int, default=1)
    _common_flags(p)

    p = sub.add_parser("mechanism", help="block sizes from the designer's rules")
    p.add_argument("--a-max", type=int, default=None, help="hard cap: brute-force search up to it")
    p.add_argument("--replications", type=int, default=50, help="Monte Carlo draws per candidate")
    _common_flags(p)

    p = sub.add_parser("poa", help="construct and verify worst-case ratio witnesses")
    p.add_argument("--target", type=float, required=True, help="ratio the witnesses must reach")
    _common_flags(p)

    p = sub.add_parser("experiment", help="run a full study scenario")
    p.add_argument(
        "--scenario",
        required=True,
        choices=[s.value for s in xp.Scenario if s != xp.Scenario.POA_WITNESS],
    )
    p.add_argument("--replications", type=int, default=200)
    p.add_argument("--sellers", default="50,100,200,400", help="comma-separated N grid")
    p.add_argument("--counts", default=None, help="comma-separated per-period N sequence")
    p.add_argument("--a-max", type=int, default=None, help="block size cap for blocksize_limit")
    p.add_argument("--non-selfish", type=float, default=None, help="protocol-following power share")
    _common_flags(p)

    return parser


def _load(args) -> xp.HarnessConfig:
    return xp.load_config(args.config) if args.config else xp.HarnessConfig()


def _sample_market(config: xp.HarnessConfig, block_size: int | None, seed: int):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    k, n = config.num_buyers, config.num_sellers
    r = config.distributions["R"].sample(rng, k)
    c = config.distributions["C"].sample(rng, n)
    b = config.distributions["B"].sample(rng, k)
    q = config.distributions["Q"].sample(rng, n)
    a = block_size or optimal_block_size_distributional(config.mechanism_config(k, n))
    return build_instance(
        utilities=r,
        costs=c,
        buy_quantities=b,
        sell_quantities=q,
        block_size=a,
        delay_cost=config.delay_cost,
        fee_unit=config.fee_unit,
    )


def _write(args, rows: list[dict], config: xp.HarnessConfig | None) -> None:
    text = emit_report(
        rows, args.format, args.out, config.to_jsonable() if config else {}, args.seed
    )
    if not args.out:
        sys.stdout.write(text)


def _cmd_ingest(args) -> None:
    column_map = None
    if args.columns:
        column_map = dict(pair.split("=", 1) for pair in args.columns.split(","))
    ds = ingest_csv(args.input, column_map=column_map)
    fitted = ds.to_distributions()
    rows = [
        {
            "scenario": "ingest",
            "mechanism": "dataset",
            "N": len(ds),
            "K": len(ds),
            "A": "",
            "sw_mean": "",
            "sw_stderr": "",
            "sw_opt": "",
            "ratio": "",
            "norm_offset": ds.norm_offset,
            "norm_scale": ds.norm_scale,
            "price_to_value_ratio": ds.price_to_value_ratio,
            "distributions": {k: v.to_config() for k, v in fitted.items()},
        }
    ]
    _write(args, rows, None)


def _cmd_equilibrium(args) -> None:
    config = _load(args)
    inst = _sample_market(config, args.block_size, args.seed)
    a_th = eq.crossing_index(inst)
    fees = eq.threshold_fees(inst)
    pure = eq.psne(inst)
    row = {
        "scenario": "equilibrium",
        "mechanism": "psne" if pure is not None else "msne",
        "N": inst.num_sellers,
        "K": inst.num_buyers,
        "A": inst.block_size,
        "crossing_index": a_th,
        "sigma_buy": fees.sigma_buy,
        "sigma_sell": fees.sigma_sell,
        "sw_mean": "",
        "sw_stderr": "",
        "sw_opt": "",
        "ratio": "",
    }
    if pure is None:
        buy, sell = eq.msne(inst)
        row.update(
            {
                "buy_support": [buy.lower, buy.upper],
                "sell_support": [sell.lower, sell.upper],
                "contenders": buy.contenders,
            }
        )
    _write(args, [row], config)


def _cmd_simulate(args) -> None:
    config = _load(args)
    inst = _sample_market(config, args.block_size, args.seed)
    report = performance_ratio(
        inst, inst.block_size, mc_replications=args.replications, rng_seed=args.seed
    )
    rows = [
        {
            "scenario": "simulate",
            "mechanism": "equilibrium",
            "N": inst.num_sellers,
            "K": inst.num_buyers,
            "A": inst.block_size,
            "sw_mean": report.sw,
            "sw_stderr": report.sw_stderr,
            "sw_opt": report.sw_opt,
            "ratio": report.sw / report.sw_opt if report.sw_opt else 1.0,
        }
    ]
    _write(args, rows, config)


def _cmd_mechanism(args) -> None:
    config = _load(args)
    mc = config.mechanism_config(config.num_buyers, config.num_sellers)
    rows = []
    a_dist = optimal_block_size_distributional(mc)
    rows.append(
        {
            "scenario": "mechanism",
            "mechanism": xp.MechanismKind.ABS_DISTRIBUTIONAL.value,
            "N": config.num_sellers,
            "K": config.num_buyers,
            "A": a_dist,
            "sw_mean": "",
            "sw_stderr": "",
            "sw_opt": "",
            "ratio": "",
        }
    )
    inst = _sample_market(config, a_dist, args.seed)
    rows.append(
        {
            "scenario": "mechanism",
            "mechanism": xp.MechanismKind.ABS_COMPLETE.value,
            "N": inst.num_sellers,
            "K": inst.num_buyers,
            "A": optimal_block_size_complete(inst),
            "sw_mean": "",
            "sw_stderr": "",
            "sw_opt": "",
            "ratio": "",
        }
    )
    if args.a_max is not None:
        report = capped_search_report(
            mc, args.a_max, mc_replications=args.replications, rng_seed=args.seed
        )
        idx = report.block_sizes.index(report.best_block_size)
        rows.append(
            {
                "scenario": "mechanism",
                "mechanism": "abs_capped",
                "N": config.num_sellers,
                "K": config.num_buyers,
                "A": report.best_block_size,
                "sw_mean": report.mean_welfare[idx],
                "sw_stderr": report.stderr_welfare[idx],
                "sw_opt": "",
                "ratio": "",
            }
        )
    _write(args, rows, config)


def _cmd_poa(args) -> None:
    config = _load(args)
    high, low = unbounded_poa_witness(args.target)
    rows = []
    for name, inst in (("oversized_block", high), ("undersized_block", low)):
        report = performance_ratio(inst, inst.block_size, mc_replications=8, rng_seed=args.seed)
        rows.append(
            {
                "scenario": xp.Scenario.POA_WITNESS.value,
                "mechanism": name,
                "N": inst.num_sellers,
                "K": inst.num_buyers,
                "A": inst.block_size,
                "sw_mean": report.sw,
                "sw_stderr": report.sw_stderr,
                "sw_opt": report.sw_opt,
                "ratio": report.ratio,
            }
        )
    _write(args, rows, config)


def _cmd_experiment(args) -> None:
    config = _load(args)
    spec = xp.ExperimentSpec(
        scenario=xp.Scenario(args.scenario),
        non_selfish_fraction=(
            args.non_selfish if args.non_selfish is not None else config.non_selfish_fraction
        ),
        replications=args.replications,
        seed=args.seed,
        output_path=args.out,
        seller_grid=tuple(int(n) for n in args.sellers.split(",")),
        threads=args.threads,
    )
    if spec.scenario == xp.Scenario.MECHANISM_COMPARISON:
        rows = xp.run_mechanism_comparison(spec, config)
    elif spec.scenario == xp.Scenario.RANDOM_COUNTS:
        if not args.counts:
            raise SystemExit("random_counts needs --counts N1,N2,...")
        rows = xp.run_random_counts(spec, config, [int(n) for n in args.counts.split(",")])
    else:
        if args.a_max is None:
            raise SystemExit("blocksize_limit needs --a-max")
        rows = xp.run_blocksize_limit(spec, config, args.a_max)
    _write(args, rows, config)


_HANDLERS = {
    "ingest": _cmd_ingest,
    "equilibrium": _cmd_equilibrium,
    "simulate": _cmd_simulate,
    "mechanism": _cmd_mechanism,
    "poa": _cmd_poa,
    "experiment": _cmd_experiment,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _HANDLERS[args.command](args)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
