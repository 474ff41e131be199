"""Command-line interface for dstack-sim.

Usage:
    dstack-sim knee [--profile CSV | --n1 N ...]      Knee per batch or per N1
    dstack-sim optimize --model NAME --rate R         Efficacy-optimal GPU% and batch
    dstack-sim schedule --models A B ...              Build one scheduling session
    dstack-sim simulate --scenario FILE --seed S      Run the discrete-event simulator
    dstack-sim ideal-compare [INSTANCE]               Compare against the ideal scheduler
    dstack-sim catalog                                Export the built-in model catalog
"""

from __future__ import annotations

import argparse
import sys
from typing import NoReturn

from . import __version__
from .cli_commands import (
    EXIT_USAGE,
    cmd_catalog,
    cmd_ideal_compare,
    cmd_knee,
    cmd_optimize,
    cmd_schedule,
    cmd_simulate,
    run_command,
)
from .cli_output import print_error
from .config import MEM_MODES, Config, set_config
from .logging import get_logger, setup_logging

logger = get_logger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors exit with status 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(value: str) -> int:
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed: {value!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer: {value}")
    return seed


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser for the CLI."""
    parser = ArgumentParser(
        prog="dstack-sim",
        description="GPU spatio-temporal scheduling library and simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    # Knees of the analytic model for three first-kernel widths
    dstack-sim --mem-mode off knee --n1 20 40 60

    # Operating point of Mobilenet at 2079 req/s
    dstack-sim optimize --model Mobilenet --slo 50 --rate 2079

    # D-STACK session with dynamic fill
    dstack-sim schedule --models Alexnet ResNet-50 VGG-19 --fill

    # Simulate a shipped scenario, writing CSVs to results/
    dstack-sim --out results simulate --scenario c4_dstack --seed 1
        """,
    )

    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )

    parser.add_argument(
        "-c",
        "--config",
        type=str,
        help="Path to configuration file",
        metavar="FILE",
    )

    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Log level (default: INFO)",
    )

    parser.add_argument(
        "--json-output",
        action="store_true",
        help="Print tables as JSON records instead of CSV",
    )

    parser.add_argument(
        "-o",
        "--out",
        type=str,
        help="Directory for CSV output (default: print the main table)",
        metavar="DIR",
    )

    parser.add_argument("--slot-us", type=int, help="Occupancy slot width in microseconds")
    parser.add_argument("--margin", type=float, help="Knee over-provisioning in GPU points")
    parser.add_argument("--mem-mode", choices=MEM_MODES, help="Analytic memory-wait mode")
    parser.add_argument("--jobs", type=int, help="Worker threads for independent scenarios")

    subparsers = parser.add_subparsers(
        dest="command",
        title="commands",
        description="Available commands",
    )

    # knee command
    knee_parser = subparsers.add_parser(
        "knee",
        help="Find knees from a profile or the analytic model",
        description="Per-batch knees of a latency profile, or per-N1 knees of the analytic model",
    )
    knee_parser.add_argument("--profile", type=str, help="Latency profile CSV", metavar="CSV")
    knee_parser.add_argument("--model", type=str, help="Only this model of the profile")
    knee_parser.add_argument(
        "--probe",
        action="store_true",
        help="Also run the online knee probe on each profile",
    )
    knee_parser.add_argument(
        "--n1",
        type=int,
        nargs="+",
        default=[20, 40, 60],
        help="Parallel operations of the first kernel (default: 20 40 60)",
    )
    knee_parser.add_argument("--k-max", type=int, default=50, help="Kernels (default: 50)")
    knee_parser.add_argument(
        "--t-p", type=float, default=40.0, help="Time per parallel operation (default: 40)"
    )
    knee_parser.add_argument(
        "--t-np", type=float, default=10.0, help="Serialized time per kernel (default: 10)"
    )
    knee_parser.add_argument("--s-max", type=int, default=80, help="Largest SM count (default: 80)")
    knee_parser.add_argument("--batch", type=int, default=None, help="Batch size")
    knee_parser.add_argument(
        "--data-bytes", type=float, default=0.0, help="Bytes moved per kernel (default: 0)"
    )
    knee_parser.add_argument(
        "--mem-bw",
        type=float,
        default=None,
        help="Memory bandwidth per SM (default: no memory term)",
    )

    # optimize command
    optimize_parser = subparsers.add_parser(
        "optimize",
        help="Choose GPU%% and batch for one model",
        description="Efficacy-maximising operating point under an SLO",
    )
    optimize_parser.add_argument("--profile", type=str, help="Latency profile CSV", metavar="CSV")
    optimize_parser.add_argument("--model", type=str, help="Model name (catalog or in --profile)")
    optimize_parser.add_argument("--slo", type=float, help="SLO in ms (default: catalog SLO)")
    optimize_parser.add_argument("--rate", type=float, required=True, help="Requests per second")
    optimize_parser.add_argument("--max-batch", type=int, help="Batch limit")

    # schedule command
    schedule_parser = subparsers.add_parser(
        "schedule",
        help="Build one scheduling session",
        description="Construct a temporal, GSLICE, max-min or D-STACK session",
    )
    schedule_parser.add_argument(
        "--scheduler",
        choices=["dstack", "temporal", "gslice", "wmax"],
        default="dstack",
        help="Scheduler (default: dstack)",
    )
    schedule_parser.add_argument("--models", type=str, nargs="+", help="Catalog model names")
    schedule_parser.add_argument("--catalog", type=str, help="Model catalog CSV", metavar="CSV")
    schedule_parser.add_argument("--scenario", type=str, help="Scenario file or shipped name")
    schedule_parser.add_argument("--profile", type=str, help="Latency profile CSV", metavar="CSV")
    schedule_parser.add_argument(
        "--fill", action="store_true", help="Add dynamic fill runs to the session"
    )

    # simulate command
    simulate_parser = subparsers.add_parser(
        "simulate",
        help="Run the discrete-event simulator",
        description="Simulate one or more scenarios with a fixed seed",
    )
    simulate_parser.add_argument(
        "--scenario",
        type=str,
        nargs="+",
        required=True,
        help="Scenario files or shipped scenario names",
        metavar="FILE",
    )
    simulate_parser.add_argument(
        "--seed", type=_seed, required=True, help="Random seed (unsigned 64-bit)"
    )
    simulate_parser.add_argument(
        "--variable-rate",
        action="store_true",
        help="Report per-session rates against a constant-rate baseline",
    )

    # ideal-compare command
    ideal_parser = subparsers.add_parser(
        "ideal-compare",
        help="Compare schedulers against the ideal",
        description="Temporal, GSLICE, D-STACK and ideal on kernel traces",
    )
    ideal_parser.add_argument(
        "instance",
        nargs="?",
        default="convnet_trio",
        help="Kernel-trace instance file or shipped name (default: convnet_trio)",
    )
    ideal_parser.add_argument("--horizon", type=float, help="Horizon in ms")

    # catalog command
    catalog_parser = subparsers.add_parser(
        "catalog",
        help="Export the built-in catalog",
        description="Export the model catalog, its latency grids or the shipped scenarios",
    )
    catalog_group = catalog_parser.add_mutually_exclusive_group()
    catalog_group.add_argument("--profiles", action="store_true", help="Print latency grids")
    catalog_group.add_argument("--scenarios", action="store_true", help="List shipped scenarios")

    return parser


def load_config(args: argparse.Namespace) -> Config:
    """Load configuration from file or environment, then apply CLI overrides."""
    config = Config.from_file(args.config) if args.config else Config.from_env()

    if args.log_level:
        config.logging.level = args.log_level
    if args.out:
        config.output_dir = args.out
    if args.slot_us is not None:
        config.scheduler.slot_us = args.slot_us
    if args.margin is not None:
        config.scheduler.margin_pct = args.margin
    if args.mem_mode:
        config.analytic.mem_mode = args.mem_mode
    if args.jobs is not None:
        config.jobs = args.jobs

    config.validate()
    return config


def main() -> NoReturn:
    """Main entry point for the CLI."""
    parser = create_parser()
    args = parser.parse_args()

    # Load and set configuration
    try:
        config = load_config(args)
        set_config(config)
    except Exception as e:
        print_error(f"Failed to load configuration: {e}")
        sys.exit(EXIT_USAGE)

    # Setup logging
    setup_logging(config.logging)

    # Run the command
    try:
        exit_code = run_command(args, config)
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        exit_code = 130
    except Exception as e:
        logger.exception("Unexpected error")
        print_error(f"Unexpected error: {e}")
        exit_code = EXIT_USAGE

    sys.exit(exit_code)


if __name__ == "__main__":
    main()


__all__ = [
    "create_parser",
    "load_config",
    "main",
    "cmd_knee",
    "cmd_optimize",
    "cmd_schedule",
    "cmd_simulate",
    "cmd_ideal_compare",
    "cmd_catalog",
    "print_error",
]
