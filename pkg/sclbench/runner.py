"""Seeded (scenario x strategy x seed) grids.

Every cell is independent: it rebuilds its scenario from the configured
seed and draws the learner randomness from a stream derived from the
master seed, the strategy name and the seed index, so results do not
depend on how many cells run at once.
"""
import asyncio
import hashlib
import logging
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from functools import lru_cache
from typing import Iterable, Literal

import numpy as np

from sclbench.config import AnyStrategy, EvaluationConfig, ExperimentConfig, ScenarioConfig
from sclbench.evaluation import PrequentialTrace, cl_matrix, prequential_run
from sclbench.exceptions import AggregationError, InvalidArgumentError, UndefinedMetricError
from sclbench.loader import load_csv_scenario
from sclbench.metrics import KappaMatrix, acc_final, anytime_accuracy, bwt, k_avg
from sclbench.models import Record
from sclbench.streams import (
    Scenario,
    build_geometry_scenario,
    build_real_scenario,
    build_virtual_scenario,
)
from sclbench.strategies import batch_size_for, build_detector, build_learner

logger = logging.getLogger(__name__)

METRICS = ("k_avg", "bwt", "aaa")


class Cell(Record):
    scenario: ScenarioConfig
    strategy: AnyStrategy
    seed_index: int
    seed: int
    master_seed: int
    evaluation: EvaluationConfig

    @property
    def run_id(self) -> str:
        return f"{self.scenario.label}__{self.strategy.label}__seed{self.seed_index}"


class RunMetrics(Record):
    scenario: str
    strategy: str
    seed_index: int
    seed: int
    k_avg: float
    bwt: float | None
    aaa: float
    acc: float


class RunResult(Record):
    scenario: str
    strategy: str
    seed_index: int
    seed: int
    status: Literal["ok", "failed"] = "ok"
    error: str | None = None
    trace: PrequentialTrace | None = None
    kappa_matrix: KappaMatrix | None = None
    accuracy_matrix: KappaMatrix | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def run_id(self) -> str:
        return f"{self.scenario}__{self.strategy}__seed{self.seed_index}"

    def metrics(self) -> RunMetrics:
        if not self.ok:
            raise AggregationError(f"run {self.run_id} failed: {self.error}")
        try:
            backward = bwt(self.kappa_matrix)
        except UndefinedMetricError:
            backward = None
        return RunMetrics(
            scenario=self.scenario,
            strategy=self.strategy,
            seed_index=self.seed_index,
            seed=self.seed,
            k_avg=k_avg(self.kappa_matrix),
            bwt=backward,
            aaa=anytime_accuracy(self.trace),
            acc=acc_final(self.accuracy_matrix),
        )


class SummaryRow(Record):
    strategy: str
    scenario: str
    runs: int
    k_avg_mean: float
    k_avg_std: float
    bwt_mean: float
    bwt_std: float
    aaa_mean: float
    aaa_std: float


class RunReport(Record):
    runs: tuple[RunMetrics, ...]
    rows: tuple[SummaryRow, ...]


def strategy_rng(master_seed: int, strategy: str, seed_index: int) -> np.random.Generator:
    strategy_id = int.from_bytes(hashlib.sha256(strategy.encode()).digest()[:4], "big")
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(strategy_id, seed_index))
    )


@lru_cache(maxsize=8)
def _cached_scenario(spec_json: str, seed: int) -> Scenario:
    spec = ScenarioConfig.model_validate_json(spec_json)
    speed = spec.speed.to_speed()
    common = dict(
        examples_per_concept=spec.examples_per_concept,
        test_per_concept=spec.test_per_concept,
        speed=speed,
    )
    digits = dict(noise_p=spec.noise, jitter=spec.jitter, **common)
    match spec.kind:
        case "virtual":
            scenario = build_virtual_scenario(seed, **digits)
        case "real":
            scenario = build_real_scenario(seed, task_order=spec.task_order, **digits)
        case "geometry":
            scenario = build_geometry_scenario(spec.geometry, seed, **common)
        case _:
            scenario = load_csv_scenario(spec.path)
    return scenario


def build_scenario(spec: ScenarioConfig, seed: int) -> Scenario:
    return _cached_scenario(spec.model_dump_json(), seed)


def grid_cells(config: ExperimentConfig) -> list[Cell]:
    return [
        Cell(
            scenario=scenario,
            strategy=strategy,
            seed_index=seed_index,
            seed=seed,
            master_seed=config.master_seed,
            evaluation=config.evaluation,
        )
        for scenario in config.scenarios
        for strategy in config.strategies
        for seed_index, seed in enumerate(config.seeds)
    ]


def run_cell(cell: Cell) -> RunResult:
    """Run one grid cell; failures are reported in the result, never raised."""
    identity = dict(
        scenario=cell.scenario.label,
        strategy=cell.strategy.label,
        seed_index=cell.seed_index,
        seed=cell.seed,
    )
    logger.info(f"Starting {cell.run_id}")
    try:
        scenario = build_scenario(cell.scenario, cell.seed)
        rng = strategy_rng(cell.master_seed, cell.strategy.label, cell.seed_index)
        learner = build_learner(cell.strategy, scenario.n_features, 2, rng)
        trace, checkpoints = prequential_run(
            scenario,
            learner,
            batch_size=batch_size_for(cell.strategy, cell.evaluation),
            window_size=cell.evaluation.window,
            detector=build_detector(cell.evaluation),
            strategy_name=cell.strategy.label,
        )
        if trace.scenario != cell.scenario.label:
            trace = trace.update({"scenario": cell.scenario.label})
        test_sets = scenario.segment_test_sets()
        result = RunResult(
            **identity,
            trace=trace,
            kappa_matrix=cl_matrix(checkpoints, test_sets, metric="kappa"),
            accuracy_matrix=cl_matrix(checkpoints, test_sets, metric="accuracy"),
        )
    except Exception as error:
        logger.exception(f"Run {cell.run_id} failed")
        return RunResult(**identity, status="failed", error=f"{type(error).__name__}: {error}")
    logger.info(f"Finished {cell.run_id}")
    return result


async def run_grid(config: ExperimentConfig, jobs: int | None = None) -> list[RunResult]:
    """Results come back in grid order (scenario, strategy, seed) whatever the
    number of workers.
    """
    cells = grid_cells(config)
    jobs = config.effective_jobs(jobs)
    if jobs < 1:
        raise InvalidArgumentError(f"jobs must be >= 1, got {jobs}")
    logger.info(f"Running {len(cells)} cells with {jobs} worker(s)")
    loop = asyncio.get_running_loop()
    executor: Executor = ProcessPoolExecutor(jobs) if jobs > 1 else ThreadPoolExecutor(1)
    tasks = []
    with executor:
        async with asyncio.TaskGroup() as tg:
            for cell in cells:
                tasks.append(tg.create_task(_run_in(loop, executor, cell)))
    results = [task.result() for task in tasks]
    failed = [r.run_id for r in results if not r.ok]
    if failed:
        logger.warning(f"{len(failed)} run(s) failed: {', '.join(failed)}")
    return results


async def _run_in(loop: asyncio.AbstractEventLoop, executor: Executor, cell: Cell) -> RunResult:
    return await loop.run_in_executor(executor, run_cell, cell)


def _mean_std(values: list[float]) -> tuple[float, float]:
    if not values:
        return float("nan"), float("nan")
    data = np.asarray(values, dtype=np.float64)
    std = float(np.std(data, ddof=1)) if data.size > 1 else 0.0
    return float(np.mean(data)), std


def aggregate_runs(results: Iterable[RunResult], seeds: list[int] | None = None) -> RunReport:
    """Mean and sample standard deviation per (strategy, scenario).

    A cell with a failed run, or whose seeds differ from `seeds` when given,
    is left out of the summary.
    """
    results = list(results)
    if not results:
        raise AggregationError("nothing to aggregate")
    cells: dict[tuple[str, str], list[RunResult]] = {}
    for result in results:
        cells.setdefault((result.strategy, result.scenario), []).append(result)

    runs, rows = [], []
    for (strategy, scenario), members in cells.items():
        if not all(member.ok for member in members):
            logger.warning(f"Skipping {strategy} on {scenario}: some runs failed")
            continue
        if seeds is not None and sorted(m.seed for m in members) != sorted(seeds):
            logger.warning(f"Skipping {strategy} on {scenario}: runs do not match the seeds")
            continue
        metrics = [member.metrics() for member in members]
        runs.extend(metrics)
        summary = {}
        for name in METRICS:
            values = [getattr(m, name) for m in metrics if getattr(m, name) is not None]
            summary[f"{name}_mean"], summary[f"{name}_std"] = _mean_std(values)
        rows.append(SummaryRow(strategy=strategy, scenario=scenario, runs=len(metrics), **summary))
    if not rows:
        raise AggregationError("every aggregation cell has failed runs")
    return RunReport(runs=tuple(runs), rows=tuple(rows))
