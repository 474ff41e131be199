"""Command implementations for the dstack-sim CLI."""

from __future__ import annotations

import argparse
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .analytic_model import AnalyticDnn, MemMode, knee_from_curve, knee_metric, latency_curve
from .batch_optimizer import (
    Infeasible,
    OptimizationProblem,
    feasibility_region,
    optimize,
)
from .catalog import (
    builtin_catalog,
    catalog_model,
    catalog_profile,
    catalog_profiles,
    catalog_profiles_table,
    find_model,
)
from .cli_output import print_error, print_table, write_tables
from .config import Config
from .exceptions import (
    DStackSimError,
    PlacementError,
    ScenarioError,
    SearchGuardExceededError,
)
from .formatters import Table
from .logging import get_logger
from .profiles import (
    ModelConfig,
    ModelProfile,
    catalog_table,
    knee_from_profile,
    load_catalog,
    load_profile,
    load_profiles,
)
from .schedulers import (
    Oversubscribed,
    SessionSchedule,
    compare_schedulers,
    dstack_schedule,
    fill_session,
    load_instance,
    static_spatial,
    temporal_schedule,
    wmax_min,
)
from .simulator import (
    Scenario,
    SimMetrics,
    load_scenario,
    run,
    shipped_scenarios,
    variable_rate_session,
)
from .simulator.knee_probe import online_knee_probe
from .simulator.metrics import METRIC_COLUMNS

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_OVERSUBSCRIBED = 2
EXIT_GUARD = 3
EXIT_IO = 4

Tables = dict[str, Table]


def _emit(
    args: argparse.Namespace,
    config: Config,
    tables: Mapping[str, Table],
    primary: str,
    subdir: str | None = None,
) -> None:
    """Write every table to the output directory, or the primary one to stdout."""
    if config.output_dir:
        out = Path(config.output_dir)
        if subdir:
            out = out / subdir
        for path in write_tables(out, tables):
            logger.info("Wrote %s", path)
    else:
        print_table(tables[primary], args.json_output)


# =============================================================================
# knee
# =============================================================================


def _profile_knees(
    profiles: Sequence[ModelProfile], probe: bool, probe_batch: int | None
) -> Tables:
    knees = Table(("model", "batch", "knee_pct"))
    curve = Table(("model", "gpu_pct", "batch", "latency_ms", "metric"))
    probes = Table(("model", "step", "gpu_pct", "latency_ms", "improvement", "knee_pct"))
    for profile in profiles:
        for batch in profile.batches:
            knees.append(profile.name, batch, knee_from_profile(profile, batch))
            for pct in profile.gpu_pcts:
                value = profile.cell(pct, batch)
                curve.append(profile.name, pct, batch, value, 1.0 / (value**2 * pct))
        if probe:
            result = online_knee_probe(profile, probe_batch)
            for i, step in enumerate(result.steps):
                probes.append(
                    profile.name,
                    i,
                    step.gpu_pct,
                    step.latency_ms,
                    step.improvement,
                    result.knee_pct,
                )
    tables: Tables = {"knees": knees, "knee_curve": curve}
    if probe:
        tables["knee_probe"] = probes
    return tables


def _analytic_knees(args: argparse.Namespace, config: Config) -> Tables:
    mode = MemMode(config.analytic.mem_mode.lower())
    batch = args.batch if args.batch is not None else 1
    knees = Table(("n1", "batch", "knee_sm"))
    curve = Table(("n1", "s", "e_t", "metric"))
    data_bytes = (args.data_bytes,) * args.k_max if args.data_bytes else ()
    for n1 in args.n1:
        dnn = AnalyticDnn(
            k_max=args.k_max,
            p=n1,
            t_p=args.t_p,
            t_np=args.t_np,
            data_bytes=data_bytes,
            mem_bw_per_sm=args.mem_bw,
        )
        latencies = latency_curve(dnn, args.s_max, batch, mode)
        metric = knee_metric(latencies)
        knee = knee_from_curve(latencies)
        logger.debug("N1=%d: knee at %d SMs", n1, knee)
        knees.append(n1, batch, knee)
        for s, (e_t, m) in enumerate(zip(latencies, metric, strict=True), start=1):
            curve.append(n1, s, float(e_t), float(m))
    return {"knees": knees, "knee_curve": curve}


def cmd_knee(args: argparse.Namespace, config: Config) -> int:
    """Knee per batch from a profile CSV, or per N1 from the analytic model."""
    if args.profile:
        profiles = load_profiles(args.profile)
        if args.model:
            if args.model not in profiles:
                print_error(f"Model '{args.model}' not in {args.profile}")
                return EXIT_USAGE
            selected = [profiles[args.model]]
        else:
            selected = list(profiles.values())
        tables = _profile_knees(selected, args.probe, args.batch if args.probe else None)
    else:
        if args.probe:
            print_error("--probe needs a latency profile (--profile)")
            return EXIT_USAGE
        tables = _analytic_knees(args, config)
    _emit(args, config, tables, "knees")
    return EXIT_OK


# =============================================================================
# optimize
# =============================================================================

OPERATING_POINT_COLUMNS = (
    "model",
    "slo_ms",
    "rate",
    "gpu_pct",
    "batch",
    "latency_ms",
    "throughput",
    "efficacy",
    "provisioned_pct",
)


def _optimize_profile(args: argparse.Namespace) -> ModelProfile:
    if args.profile:
        return load_profile(args.profile, args.model)
    return catalog_profile(args.model)


def cmd_optimize(args: argparse.Namespace, config: Config) -> int:
    """Efficacy-maximising (GPU%, batch) for one model."""
    if not args.profile and not args.model:
        print_error("optimize needs --profile or --model")
        return EXIT_USAGE

    profile = _optimize_profile(args)
    slo_ms = args.slo
    if slo_ms is None:
        known = find_model(profile.name)
        if known is None:
            print_error(f"No SLO for '{profile.name}'; pass --slo")
            return EXIT_USAGE
        slo_ms = known.slo_ms

    problem = OptimizationProblem(profile, slo_ms, args.rate, args.max_batch)
    result = optimize(problem, margin_pct=config.scheduler.margin_pct)
    region = feasibility_region(problem)

    if isinstance(result, Infeasible):
        print_error(f"No feasible operating point for '{profile.name}' at SLO {slo_ms} ms")
        if config.output_dir:
            _emit(args, config, {"feasibility_region": region}, "feasibility_region")
        return EXIT_OVERSUBSCRIBED

    point = Table(OPERATING_POINT_COLUMNS)
    point.append(
        profile.name,
        slo_ms,
        args.rate,
        result.gpu_pct,
        result.batch,
        result.latency_ms,
        result.throughput,
        result.efficacy,
        result.provisioned_pct,
    )
    _emit(args, config, {"operating_point": point, "feasibility_region": region}, "operating_point")
    return EXIT_OK


# =============================================================================
# schedule
# =============================================================================

SUMMARY_COLUMNS = ("scheduler", "models", "session_ms", "runs", "utilization_pct", "max_pct")
ALLOCATION_COLUMNS = ("model", "knee_pct", "allocation_pct")
UNPLACED_COLUMNS = ("model", "repeat")


def _schedule_inputs(
    args: argparse.Namespace,
) -> tuple[list[ModelConfig], dict[str, ModelProfile], dict[str, float] | None]:
    """(models, profiles, request rates) from a scenario, a catalog CSV or model names."""
    if args.scenario:
        scenario = load_scenario(args.scenario)
        return scenario.configs(), scenario.profiles(), scenario.rates()
    if args.catalog:
        models = load_catalog(args.catalog)
    else:
        models = [catalog_model(name) for name in args.models]
    known = catalog_profiles()
    profiles = {m.name: known[m.name] for m in models if m.name in known}
    if args.profile:
        profiles.update(load_profiles(args.profile))
    return models, profiles, None


def _summary(schedule: SessionSchedule) -> Table:
    table = Table(SUMMARY_COLUMNS)
    table.append(
        schedule.kind,
        ";".join(m.name for m in schedule.models),
        schedule.session_len_ms,
        len(schedule.runs),
        schedule.utilization(),
        schedule.max_occupancy(),
    )
    return table


def _allocations(models: Sequence[ModelConfig], shares: Sequence[float]) -> Table:
    table = Table(ALLOCATION_COLUMNS)
    for m, share in zip(models, shares, strict=True):
        table.append(m.name, m.knee_pct, share)
    return table


def cmd_schedule(args: argparse.Namespace, config: Config) -> int:
    """Build one session with the chosen scheduler."""
    if not (args.scenario or args.catalog or args.models):
        print_error("schedule needs --models, --catalog or --scenario")
        return EXIT_USAGE

    models, profiles, rates = _schedule_inputs(args)

    if args.scheduler == "wmax":
        shares = wmax_min([m.knee_pct for m in models])
        _emit(args, config, {"allocation": _allocations(models, shares)}, "allocation")
        return EXIT_OK
    if args.scheduler == "gslice":
        spatial = static_spatial(models)
        shares = [spatial[m.name] for m in models]
        _emit(args, config, {"allocation": _allocations(models, shares)}, "allocation")
        return EXIT_OK

    if args.scheduler == "temporal":
        schedule = temporal_schedule(models, slot_ms=config.scheduler.slot_ms)
    else:
        result = dstack_schedule(models, profiles, config.scheduler)
        if isinstance(result, Oversubscribed):
            unplaced = Table(UNPLACED_COLUMNS)
            for name, repeat in result.unplaced:
                unplaced.append(name, repeat)
            print_error(f"Oversubscribed: {result.reason}")
            tables: Tables = {
                "unplaced": unplaced,
                "schedule": result.partial.schedule_table(),
            }
            if config.output_dir:
                _emit(args, config, tables, "unplaced")
            return EXIT_OVERSUBSCRIBED
        schedule = result

    if args.fill:
        schedule = fill_session(schedule, profiles, rates)

    tables = {
        "schedule": schedule.schedule_table(),
        "occupancy": schedule.occupancy_table(),
        "summary": _summary(schedule),
    }
    _emit(args, config, tables, "schedule")
    return EXIT_OK


# =============================================================================
# simulate
# =============================================================================


def _simulate_one(scenario: Scenario, variable_rate: bool, config: Config) -> Tables:
    tables: Tables = {}
    metrics: SimMetrics
    if variable_rate:
        report = variable_rate_session(scenario, config)
        metrics = report.metrics
        tables["session_rates"] = report.table()
    else:
        metrics = run(scenario, config)
    tables["metrics"] = metrics.metrics_table()
    tables["utilization"] = metrics.utilization_table()
    tables["sessions"] = metrics.session_table()
    tables["latency_histogram"] = metrics.histogram_table()
    if scenario.record_requests:
        tables["requests"] = metrics.requests_table()
        tables["runs"] = metrics.runs_table()
    logger.info(
        "%s: %.1f req/s, %d violation(s), %.1f%% mean utilization",
        scenario.name,
        metrics.total_throughput,
        metrics.violations,
        metrics.mean_utilization,
    )
    return tables


def _unique_names(scenarios: Sequence[Scenario]) -> list[str]:
    names: list[str] = []
    for scenario in scenarios:
        name = scenario.name
        suffix = 2
        while name in names:
            name = f"{scenario.name}-{suffix}"
            suffix += 1
        names.append(name)
    return names


def cmd_simulate(args: argparse.Namespace, config: Config) -> int:
    """Run one or more scenarios with the given seed."""
    try:
        scenarios = [load_scenario(source).with_seed(args.seed) for source in args.scenario]
    except ScenarioError as e:
        print_error(e.format_short())
        return EXIT_USAGE

    workers = min(config.jobs, len(scenarios))
    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_simulate_one, s, args.variable_rate, config) for s in scenarios
            ]
            results = [f.result() for f in futures]
    except (ScenarioError, PlacementError) as e:
        print_error(e.format_short())
        return EXIT_OVERSUBSCRIBED

    names = _unique_names(scenarios)
    if config.output_dir:
        for name, tables in zip(names, results, strict=True):
            _emit(args, config, tables, "metrics", subdir=name)
        return EXIT_OK

    combined = Table(("scenario", *METRIC_COLUMNS))
    for name, tables in zip(names, results, strict=True):
        for row in tables["metrics"].rows:
            combined.append(name, *row)
    print_table(combined, args.json_output)
    return EXIT_OK


# =============================================================================
# ideal-compare
# =============================================================================


def cmd_ideal_compare(args: argparse.Namespace, config: Config) -> int:
    """Temporal, GSLICE, D-STACK and ideal on one kernel-trace instance."""
    instance = load_instance(args.instance)
    horizon = args.horizon if args.horizon is not None else config.simulator.horizon_ms
    comparison = compare_schedulers(
        instance,
        horizon_ms=horizon,
        slot_ms=config.scheduler.slot_ms,
        guard=config.simulator.ideal_guard,
        min_share=min(config.scheduler.reduced_gpu_steps, default=1.0),
    )
    logger.info("D-STACK reaches %.1f%% of ideal throughput", comparison.dstack_ideal_ratio * 100)
    _emit(args, config, {"comparison": comparison.table()}, "comparison")
    return EXIT_OK


# =============================================================================
# catalog
# =============================================================================


def cmd_catalog(args: argparse.Namespace, config: Config) -> int:
    """Export the built-in catalog, its latency grids, or the shipped scenario names."""
    scenarios = Table(("scenario",))
    for name in shipped_scenarios():
        scenarios.append(name)
    tables: Tables = {
        "catalog": catalog_table(builtin_catalog()),
        "profiles": catalog_profiles_table(),
        "scenarios": scenarios,
    }
    if args.profiles:
        primary = "profiles"
    elif args.scenarios:
        primary = "scenarios"
    else:
        primary = "catalog"
    _emit(args, config, tables, primary)
    return EXIT_OK


# =============================================================================
# Dispatch
# =============================================================================


def run_command(args: argparse.Namespace, config: Config) -> int:
    """Dispatch to the subcommand and map errors to exit codes."""
    command_map: dict[str, Callable[[argparse.Namespace, Config], int]] = {
        "knee": cmd_knee,
        "optimize": cmd_optimize,
        "schedule": cmd_schedule,
        "simulate": cmd_simulate,
        "ideal-compare": cmd_ideal_compare,
        "catalog": cmd_catalog,
    }

    if args.command is None:
        print_error("No command specified. Use --help for usage information.")
        return EXIT_USAGE

    cmd_func = command_map.get(args.command)
    if cmd_func is None:
        print_error(f"Unknown command: {args.command}")
        return EXIT_USAGE

    try:
        return cmd_func(args, config)
    except SearchGuardExceededError as e:
        print_error(e.format_short())
        return EXIT_GUARD
    except DStackSimError as e:
        print_error(e.format_short())
        return EXIT_USAGE
    except OSError as e:
        print_error(str(e))
        return EXIT_IO


__all__ = [
    "EXIT_OK",
    "EXIT_USAGE",
    "EXIT_OVERSUBSCRIBED",
    "EXIT_GUARD",
    "EXIT_IO",
    "cmd_knee",
    "cmd_optimize",
    "cmd_schedule",
    "cmd_simulate",
    "cmd_ideal_compare",
    "cmd_catalog",
    "run_command",
]
