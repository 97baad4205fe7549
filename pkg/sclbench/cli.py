import argparse
import asyncio
import logging
import os
import sys
from pathlib import Path

from sclbench.config import parse_config
from sclbench.exceptions import AggregationError, ConfigError, SclBenchError
from sclbench.report import emit_report, load_runs, render_plot, summary_frame, write_summary
from sclbench.runner import aggregate_runs, run_grid
from sclbench.utils import parse_overrides

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "SCLBENCH_LOG_LEVEL"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILED_RUNS = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sclbench", description="Streaming and continual learning benchmark"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a configured experiment grid")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    run.add_argument("--jobs", type=int, help="number of worker processes")
    run.add_argument("--master-seed", type=int)
    run.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a configuration value, e.g. evaluation.window=500",
    )

    report = commands.add_parser("report", help="recompute summary.csv from persisted runs")
    report.add_argument("--in", dest="in_dir", required=True, type=Path)

    plot = commands.add_parser("plot", help="render persisted runs as one SVG")
    plot.add_argument("--in", dest="in_dir", required=True, type=Path)
    plot.add_argument("--out", required=True, type=Path)
    return parser


def configure_logging(verbose: bool) -> None:
    level = "DEBUG" if verbose else os.environ.get(LOG_LEVEL_ENV, "INFO").upper()
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True
    )


def command_run(args: argparse.Namespace) -> int:
    try:
        overrides = parse_overrides(args.overrides)
    except ValueError as error:
        logger.error(str(error))
        return EXIT_CONFIG
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    if args.master_seed is not None:
        overrides["master_seed"] = args.master_seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    try:
        config = parse_config(args.config, overrides)
    except ConfigError as error:
        logger.error(f"Invalid configuration {args.config}: {error}")
        return EXIT_CONFIG
    results = asyncio.run(run_grid(config))
    emit_report(results, config.output_dir)
    return EXIT_FAILED_RUNS if any(not r.ok for r in results) else EXIT_OK


def command_report(args: argparse.Namespace) -> int:
    runs = load_runs(args.in_dir)
    try:
        report = aggregate_runs(runs)
    except AggregationError as error:
        logger.error(str(error))
        return EXIT_FAILED_RUNS
    write_summary(report, args.in_dir)
    print(summary_frame(report).to_string(index=False))
    return EXIT_FAILED_RUNS if any(not r.ok for r in runs) else EXIT_OK


def command_plot(args: argparse.Namespace) -> int:
    render_plot(load_runs(args.in_dir), args.out)
    return EXIT_OK


COMMANDS = {"run": command_run, "report": command_report, "plot": command_plot}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except SclBenchError as error:
        logger.error(str(error))
        return EXIT_FAILED_RUNS


if __name__ == "__main__":
    sys.exit(main())
