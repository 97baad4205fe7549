"""Persisted results: per-run traces and matrices, the run status table, the
summary table and the kappa-over-steps plots.

Layout of an output directory::

    runs/<scenario>__<strategy>__seed<k>/prequential.csv
    runs/<scenario>__<strategy>__seed<k>/clmatrix.json
    status.csv
    summary.csv
    kappa_<scenario>.svg
"""
import logging
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from sclbench.evaluation import PrequentialTrace
from sclbench.exceptions import AggregationError, InvalidArgumentError, SchemaError
from sclbench.metrics import KappaMatrix
from sclbench.models import Record
from sclbench.runner import RunReport, RunResult, aggregate_runs

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SUMMARY_COLUMNS = [
    "strategy",
    "scenario",
    "k_avg_mean",
    "k_avg_std",
    "bwt_mean",
    "bwt_std",
    "aaa_mean",
    "aaa_std",
]
TRACE_COLUMNS = ["step", "concept", "y_true", "y_pred", "kappa"]
STATUS_COLUMNS = ["scenario", "strategy", "seed_index", "seed", "status", "error"]
MAX_PLOTTED_POINTS = 2000


class RunFile(Record):
    """Content of `clmatrix.json`."""

    schema_version: int = SCHEMA_VERSION
    scenario: str
    strategy: str
    seed_index: int
    seed: int
    kappa: tuple[tuple[float, ...], ...]
    accuracy: tuple[tuple[float, ...], ...]
    k_avg: float
    bwt: float | None
    aaa: float
    acc: float
    boundaries: tuple[int, ...]
    resets: tuple[int, ...]


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"# schema_version: {SCHEMA_VERSION}\n")
        frame.to_csv(handle, index=False, lineterminator="\n")
    return path


def _read_csv(path: Path, columns: list[str]) -> pd.DataFrame:
    frame = pd.read_csv(path, comment="#", float_precision="round_trip", keep_default_na=False)
    if list(frame.columns) != columns:
        raise SchemaError(f"{path}: expected columns {columns}, got {list(frame.columns)}")
    return frame


def write_run(result: RunResult, out_dir: Path) -> list[Path]:
    run_dir = Path(out_dir) / "runs" / result.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    trace = result.trace
    frame = pd.DataFrame(
        {
            "step": trace.steps,
            "concept": trace.concepts,
            "y_true": trace.y_true,
            "y_pred": trace.y_pred,
            "kappa": trace.kappa,
        },
        columns=TRACE_COLUMNS,
    )
    metrics = result.metrics()
    run_file = RunFile(
        scenario=result.scenario,
        strategy=result.strategy,
        seed_index=result.seed_index,
        seed=result.seed,
        kappa=result.kappa_matrix.values,
        accuracy=result.accuracy_matrix.values,
        k_avg=metrics.k_avg,
        bwt=metrics.bwt,
        aaa=metrics.aaa,
        acc=metrics.acc,
        boundaries=trace.boundaries,
        resets=trace.resets,
    )
    matrix_path = run_dir / "clmatrix.json"
    matrix_path.write_text(run_file.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return [_write_csv(frame, run_dir / "prequential.csv"), matrix_path]


def write_status(results: Sequence[RunResult], out_dir: Path) -> Path:
    frame = pd.DataFrame(
        [[r.scenario, r.strategy, r.seed_index, r.seed, r.status, r.error or ""] for r in results],
        columns=STATUS_COLUMNS,
    )
    return _write_csv(frame, Path(out_dir) / "status.csv")


def summary_frame(report: RunReport) -> pd.DataFrame:
    return pd.DataFrame(
        [row.model_dump(include=set(SUMMARY_COLUMNS)) for row in report.rows],
        columns=SUMMARY_COLUMNS,
    )


def write_summary(report: RunReport, out_dir: Path) -> Path:
    return _write_csv(summary_frame(report), Path(out_dir) / "summary.csv")


def _mean_kappa(traces: list[PrequentialTrace]) -> tuple[np.ndarray, np.ndarray]:
    length = min(len(t) for t in traces)
    values = np.mean([np.asarray(t.kappa[:length]) for t in traces], axis=0)
    stride = max(1, length // MAX_PLOTTED_POINTS)
    steps = np.arange(length)[::stride]
    return steps, values[::stride]


def render_plot(results: Iterable[RunResult], path: str | Path) -> Path:
    """One panel per scenario with the seed-averaged windowed kappa of every
    strategy and a vertical marker at each known drift.
    """
    by_scenario: dict[str, dict[str, list[PrequentialTrace]]] = {}
    for result in results:
        if result.ok:
            strategies = by_scenario.setdefault(result.scenario, {})
            strategies.setdefault(result.strategy, []).append(result.trace)
    if not by_scenario:
        raise InvalidArgumentError("no successful run to plot")

    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": "sclbench", "svg.fonttype": "path"}):
        figure = Figure(figsize=(8, 3 * len(by_scenario)))
        axes = figure.subplots(len(by_scenario), 1, squeeze=False)[:, 0]
        for ax, (scenario, strategies) in zip(axes, by_scenario.items()):
            for strategy, traces in strategies.items():
                steps, kappa = _mean_kappa(traces)
                ax.plot(steps, kappa, label=strategy, linewidth=0.8)
            boundaries = next(iter(strategies.values()))[0].boundaries
            for i, boundary in enumerate(boundaries):
                ax.axvline(
                    boundary,
                    color="grey",
                    linestyle="--",
                    linewidth=0.6,
                    gid=f"drift-marker-{scenario}-{i}",
                )
            ax.set_title(scenario)
            ax.set_xlabel("step")
            ax.set_ylabel("windowed kappa")
            ax.set_ylim(-1.05, 1.05)
            ax.legend(loc="lower right", fontsize="small")
        figure.tight_layout()
        figure.savefig(path, format="svg", metadata={"Date": None})
    logger.info(f"Wrote {path}")
    return path


def emit_report(results: Sequence[RunResult], out_dir: str | Path) -> list[Path]:
    if not results:
        raise InvalidArgumentError("no results to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for result in results:
        if result.ok:
            written.extend(write_run(result, out_dir))
    written.append(write_status(results, out_dir))
    try:
        written.append(write_summary(aggregate_runs(results), out_dir))
    except AggregationError as error:
        logger.warning(f"No summary written: {error}")
    scenarios = dict.fromkeys(r.scenario for r in results if r.ok)
    for scenario in scenarios:
        selected = [r for r in results if r.scenario == scenario]
        written.append(render_plot(selected, out_dir / f"kappa_{scenario}.svg"))
    logger.info(f"Wrote {len(written)} files to {out_dir}")
    return written


def load_run(run_dir: Path) -> RunResult:
    run_file = RunFile.model_validate_json((run_dir / "clmatrix.json").read_text(encoding="utf-8"))
    if run_file.schema_version != SCHEMA_VERSION:
        raise SchemaError(f"{run_dir}: unsupported schema version {run_file.schema_version}")
    frame = _read_csv(run_dir / "prequential.csv", TRACE_COLUMNS)
    trace = PrequentialTrace(
        scenario=run_file.scenario,
        strategy=run_file.strategy,
        steps=tuple(frame["step"].tolist()),
        concepts=tuple(frame["concept"].tolist()),
        y_true=tuple(frame["y_true"].tolist()),
        y_pred=tuple(frame["y_pred"].tolist()),
        kappa=tuple(frame["kappa"].tolist()),
        boundaries=run_file.boundaries,
        resets=run_file.resets,
    )
    return RunResult(
        scenario=run_file.scenario,
        strategy=run_file.strategy,
        seed_index=run_file.seed_index,
        seed=run_file.seed,
        trace=trace,
        kappa_matrix=KappaMatrix(values=run_file.kappa, metric="kappa"),
        accuracy_matrix=KappaMatrix(values=run_file.accuracy, metric="accuracy"),
    )


def load_runs(in_dir: str | Path) -> list[RunResult]:
    """Runs persisted under `in_dir`: successful ones in directory name order,
    then the failures recorded in `status.csv`.
    """
    runs_dir = Path(in_dir) / "runs"
    if not runs_dir.is_dir():
        raise InvalidArgumentError(f"{in_dir} holds no runs directory")
    results = [load_run(run_dir) for run_dir in sorted(runs_dir.iterdir()) if run_dir.is_dir()]
    status_path = Path(in_dir) / "status.csv"
    if status_path.exists():
        status = _read_csv(status_path, STATUS_COLUMNS)
        for row in status[status["status"] == "failed"].itertuples(index=False):
            results.append(
                RunResult(
                    scenario=str(row.scenario),
                    strategy=str(row.strategy),
                    seed_index=int(row.seed_index),
                    seed=int(row.seed),
                    status="failed",
                    error=str(row.error),
                )
            )
    logger.info(f"Loaded {len(results)} runs from {runs_dir}")
    return results
