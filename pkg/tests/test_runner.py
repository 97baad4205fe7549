import math

import numpy as np
import pytest

from sclbench.config import ExperimentConfig, parse_config
from sclbench.evaluation import PrequentialTrace
from sclbench.exceptions import AggregationError
from sclbench.metrics import KappaMatrix
from sclbench.runner import RunResult, aggregate_runs, grid_cells, run_cell, run_grid, strategy_rng


def fake_result(k: float, seed_index: int, strategy: str = "nb", scenario: str = "virtual"):
    trace = PrequentialTrace(
        scenario=scenario,
        strategy=strategy,
        steps=(0, 1),
        concepts=(0, 0),
        y_true=(0, 1),
        y_pred=(0, 1),
        kappa=(0.0, 1.0),
    )
    return RunResult(
        scenario=scenario,
        strategy=strategy,
        seed_index=seed_index,
        seed=seed_index,
        trace=trace,
        kappa_matrix=KappaMatrix(values=((k,),)),
        accuracy_matrix=KappaMatrix(values=((1.0,),), metric="accuracy"),
    )


def small_config(**extra) -> ExperimentConfig:
    fields = dict(
        scenarios=[{"kind": "virtual", "examples_per_concept": 60, "test_per_concept": 20}],
        strategies=[{"kind": "nb"}, {"kind": "knn", "k": 3}],
        seeds=[0, 1, 2],
    )
    return ExperimentConfig(**(fields | extra))


def test_grid_order():
    cells = grid_cells(small_config())
    assert [cell.run_id for cell in cells] == [
        "virtual__nb__seed0",
        "virtual__nb__seed1",
        "virtual__nb__seed2",
        "virtual__knn__seed0",
        "virtual__knn__seed1",
        "virtual__knn__seed2",
    ]


@pytest.mark.asyncio
async def test_run_grid(minimal_config):
    results = await run_grid(parse_config(minimal_config))
    assert len(results) == 6
    assert all(result.ok for result in results)
    assert [r.strategy for r in results] == ["nb"] * 3 + ["knn"] * 3
    for result in results:
        assert len(result.trace) == 300
        assert result.kappa_matrix.n == 5
        assert result.accuracy_matrix.metric == "accuracy"
        assert result.trace.scenario == "virtual"


@pytest.mark.asyncio
async def test_results_do_not_depend_on_workers():
    config = small_config()
    config.strategies = [{"kind": "naive", "hidden": 8}, {"kind": "forest", "n_trees": 2}]
    assert await run_grid(config, jobs=1) == await run_grid(config, jobs=2)


@pytest.mark.asyncio
async def test_failing_cells_are_isolated(tmp_path):
    config = small_config(
        scenarios=[
            {"kind": "virtual", "examples_per_concept": 60, "test_per_concept": 20},
            {"kind": "csv", "path": str(tmp_path / "missing.csv")},
        ]
    )
    results = await run_grid(config)
    assert len(results) == 12
    assert all(r.ok for r in results[:6])
    failed = results[6:]
    assert all(not r.ok and r.error and r.scenario == "missing" for r in failed)
    report = aggregate_runs(results)
    assert {(row.strategy, row.scenario) for row in report.rows} == {
        ("nb", "virtual"),
        ("knn", "virtual"),
    }
    with pytest.raises(AggregationError):
        failed[0].metrics()


def test_run_cell_reports_bad_learner_options():
    config = small_config()
    config.strategies = [{"kind": "forest", "max_features": 50}]
    result = run_cell(grid_cells(config)[0])
    assert result.status == "failed"
    assert result.trace is None


def test_aggregate_mean_and_sample_std():
    report = aggregate_runs([fake_result(k, i) for i, k in enumerate((0.9, 0.94, 0.98))])
    (row,) = report.rows
    assert row.runs == 3
    assert row.k_avg_mean == pytest.approx(0.94)
    assert row.k_avg_std == pytest.approx(0.04)
    assert row.aaa_mean == 1.0
    # a single segment has no backward transfer
    assert math.isnan(row.bwt_mean)


def test_aggregate_single_run():
    (row,) = aggregate_runs([fake_result(0.5, 0)]).rows
    assert row.k_avg_std == 0.0


def test_aggregate_seed_mismatch():
    results = [fake_result(0.5, 0), fake_result(0.6, 1, strategy="knn")]
    report = aggregate_runs(results, seeds=[1])
    assert [row.strategy for row in report.rows] == ["knn"]
    with pytest.raises(AggregationError):
        aggregate_runs(results, seeds=[7])


def test_aggregate_nothing():
    with pytest.raises(AggregationError):
        aggregate_runs([])
    failed = RunResult(scenario="x", strategy="y", seed_index=0, seed=0, status="failed")
    with pytest.raises(AggregationError):
        aggregate_runs([failed])


def test_strategy_rng_streams():
    first = strategy_rng(0, "er", 1).random(5)
    assert np.array_equal(first, strategy_rng(0, "er", 1).random(5))
    assert not np.array_equal(first, strategy_rng(0, "agem", 1).random(5))
    assert not np.array_equal(first, strategy_rng(0, "er", 2).random(5))
    assert not np.array_equal(first, strategy_rng(1, "er", 1).random(5))
