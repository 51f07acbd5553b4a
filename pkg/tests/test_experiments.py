"""Harness tests: scenarios, pairing, reproducibility, config handling."""

import json

import numpy as np
import pytest

from chainbook import distributions as dist
from chainbook.experiments import (
    ExperimentSpec,
    HarnessConfig,
    Scenario,
    benchmark_block_size,
    compare_mechanisms,
    load_config,
    run_blocksize_limit,
    run_mechanism_comparison,
    run_random_counts,
)
from chainbook.reporting import emit_report


def _separated_config(**overrides):
    defaults = dict(
        num_buyers=12,
        num_sellers=12,
        delay_cost=0.005,
        distributions={
            "R": dist.uniform(0.55, 1.0),
            "C": dist.uniform(0.0, 0.45),
            "B": dist.point_mass(1.0),
            "Q": dist.point_mass(1.0),
        },
    )
    defaults.update(overrides)
    return HarnessConfig(**defaults)


def test_benchmark_block_size_even_rounding():
    assert benchmark_block_size(10, 13) == 10
    assert benchmark_block_size(7, 13) == 8
    assert benchmark_block_size(5, 5) == 6


def test_comparison_shares_populations_across_variants():
    comp = compare_mechanisms(
        _separated_config(), num_sellers=10, non_selfish_fraction=0.2, replications=12, seed=5
    )
    # On separated values every mechanism clears the whole market in block 1.
    assert np.allclose(comp.samples["abs_distributional"], comp.optimum)
    assert np.allclose(comp.samples["benchmark_max_block"], comp.optimum)
    assert np.allclose(comp.samples["abs_non_selfish"], comp.optimum)


def test_mechanism_comparison_rows():
    spec = ExperimentSpec(
        scenario=Scenario.MECHANISM_COMPARISON,
        replications=6,
        seed=3,
        seller_grid=(8, 12),
    )
    rows = run_mechanism_comparison(spec, _separated_config())
    assert len(rows) == 2 * 5  # four mechanisms + the optimum row per N
    for row in rows:
        assert set(row) >= {"scenario", "mechanism", "N", "K", "A", "sw_mean", "sw_stderr", "sw_opt", "ratio"}
        assert row["ratio"] <= 1.0 + 1e-9


def test_random_counts_reduces_to_comparison_when_constant():
    config = _separated_config()
    spec = ExperimentSpec(scenario=Scenario.RANDOM_COUNTS, replications=1, seed=9)
    rows = run_random_counts(spec, config, [10, 10, 10, 10])
    periods = [r for r in rows if r["mechanism"] != "summary"]
    assert len(periods) == 4
    assert all(r["A"] == periods[0]["A"] for r in periods)
    summary = rows[-1]
    assert summary["mechanism"] == "summary"
    assert summary["ratio"] == pytest.approx(1.0, abs=1e-9)  # separated: exact clears


def test_random_counts_empty_sequence():
    spec = ExperimentSpec(scenario=Scenario.RANDOM_COUNTS, replications=1, seed=0)
    with pytest.raises(ValueError, match="nonempty"):
        run_random_counts(spec, _separated_config(), [])


def test_blocksize_limit_cap_binds():
    spec = ExperimentSpec(
        scenario=Scenario.BLOCK_SIZE_LIMIT, replications=4, seed=1, seller_grid=(8,)
    )
    rows = run_blocksize_limit(spec, _separated_config(), max_block_size=2)
    abs_row = next(r for r in rows if r["mechanism"] == "abs_capped")
    assert 1 <= abs_row["A"] <= 2
    bench_row = next(r for r in rows if r["mechanism"] == "benchmark_max_block")
    assert bench_row["A"] <= 2


def test_blocksize_limit_cap_one():
    spec = ExperimentSpec(
        scenario=Scenario.BLOCK_SIZE_LIMIT, replications=3, seed=2, seller_grid=(6,)
    )
    rows = run_blocksize_limit(spec, _separated_config(), max_block_size=1)
    abs_row = next(r for r in rows if r["mechanism"] == "abs_capped")
    assert abs_row["A"] == 1


def test_raising_protocol_share_never_lowers_welfare_here():
    config = _separated_config(num_buyers=10, num_sellers=8)
    selfish = compare_mechanisms(config, 8, 0.0, replications=20, seed=13)
    helped = compare_mechanisms(config, 8, 0.2, replications=20, seed=13)
    assert np.all(
        helped.samples["abs_non_selfish"] >= selfish.samples["abs_non_selfish"] - 1e-12
    )


def test_reports_reproducible_across_runs_and_threads():
    config = _separated_config()
    spec1 = ExperimentSpec(
        scenario=Scenario.MECHANISM_COMPARISON, replications=6, seed=21, seller_grid=(8,)
    )
    rows_a = run_mechanism_comparison(spec1, config)
    rows_b = run_mechanism_comparison(spec1, config)
    spec2 = ExperimentSpec(
        scenario=Scenario.MECHANISM_COMPARISON,
        replications=6,
        seed=21,
        seller_grid=(8,),
        threads=2,
    )
    rows_c = run_mechanism_comparison(spec2, config)
    text_a = emit_report(rows_a, "json", None, config.to_jsonable(), 21)
    text_b = emit_report(rows_b, "json", None, config.to_jsonable(), 21)
    text_c = emit_report(rows_c, "json", None, config.to_jsonable(), 21)
    assert text_a == text_b == text_c


def test_load_config_roundtrip(tmp_path):
    raw = {
        "K": 30,
        "N": 40,
        "rho": 0.75,
        "d": 0.02,
        "epsilon": 1e-5,
        "psi": 0.9,
        "b_lo": 1.0,
        "b_hi": 3.0,
        "non_selfish_fraction": 0.2,
        "distributions": {
            "R": {"kind": "beta", "a": 2.0, "b": 1.0},
            "C": {"kind": "uniform", "lo": 0.0, "hi": 0.5},
        },
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    config = load_config(str(path))
    assert config.num_buyers == 30
    assert config.num_sellers == 40
    assert config.rho == 0.75
    assert config.fee_unit == 1e-5
    assert config.distributions["R"].kind == "beta"
    assert config.distributions["B"].kind == "uniform"  # derived from b_lo/b_hi
    assert config.distributions["B"].support == (1.0, 3.0)
    assert config.to_jsonable()["psi"] == 0.9
    assert config.quantize_fees is False

    raw["quantize_fees"] = True
    path.write_text(json.dumps(raw), encoding="utf-8")
    assert load_config(str(path)).quantize_fees is True


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(scenario=Scenario.MECHANISM_COMPARISON, non_selfish_fraction=1.5)
    with pytest.raises(ValueError):
        ExperimentSpec(scenario=Scenario.MECHANISM_COMPARISON, replications=0)
