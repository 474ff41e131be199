"""Model placement over several GPUs and the scenario runner."""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from ..config import Config, SchedulerConfig, get_config
from ..exceptions import PlacementError
from ..logging import get_logger
from ..profiles import ModelConfig, ModelProfile
from ..schedulers import is_schedulable
from .engine import GpuWorkload, simulate_gpu
from .metrics import SimMetrics, merge_metrics
from .scenario import PlacementMode, Scenario, SchedulerKind

logger = get_logger(__name__)


@dataclass(frozen=True)
class Placement:
    """Which models each GPU hosts."""

    mode: PlacementMode
    gpus: tuple[tuple[ModelConfig, ...], ...]

    @property
    def gpu_count(self) -> int:
        return len(self.gpus)

    def hosts(self, model: str) -> list[int]:
        """Indices of the GPUs running ``model``."""
        return [i for i, models in enumerate(self.gpus) if any(m.name == model for m in models)]

    def names(self) -> list[list[str]]:
        return [[m.name for m in models] for models in self.gpus]


def _pack(
    models: Sequence[ModelConfig],
    gpu_count: int,
    profiles: Mapping[str, ModelProfile] | None,
    config: SchedulerConfig | None,
) -> list[list[ModelConfig]]:
    """First-fit decreasing by knee; a GPU fits a model while its set stays schedulable."""
    bins: list[list[ModelConfig]] = [[] for _ in range(gpu_count)]
    for model in sorted(models, key=lambda m: (-m.knee_pct, m.name)):
        for hosted in bins:
            if is_schedulable([*hosted, model], profiles, config):
                hosted.append(model)
                logger.debug("Placed '%s' with %s", model.name, [m.name for m in hosted[:-1]])
                break
        else:
            raise PlacementError(
                f"'{model.name}' ({model.knee_pct}%) fits on none of {gpu_count} GPU(s)",
                details={"placed": [[m.name for m in b] for b in bins]},
            )
    return bins


def place_multi_gpu(
    models: Sequence[ModelConfig],
    gpu_count: int,
    mode: PlacementMode = PlacementMode.PACK,
    profiles: Mapping[str, ModelProfile] | None = None,
    config: SchedulerConfig | None = None,
) -> Placement:
    """Assign models to GPUs.

    Args:
        models: Models to place
        gpu_count: GPUs available
        mode: ``pack`` (first-fit decreasing), ``replicate`` (every model on
            every GPU) or ``exclusive`` (one model per GPU)
        profiles: Latency grids for the reduced-GPU% fallback of the fit test
        config: Scheduler settings for the fit test

    Raises:
        PlacementError: A model fits nowhere, or too few GPUs for exclusive mode
    """
    if gpu_count < 1:
        raise PlacementError("At least one GPU is required", details={"gpu_count": gpu_count})

    if mode is PlacementMode.REPLICATE:
        gpus = [list(models) for _ in range(gpu_count)]
    elif mode is PlacementMode.EXCLUSIVE:
        if gpu_count < len(models):
            raise PlacementError(
                f"Exclusive placement needs {len(models)} GPUs, only {gpu_count} available"
            )
        gpus = [[m] for m in models] + [[] for _ in range(gpu_count - len(models))]
    else:
        gpus = _pack(models, gpu_count, profiles, config)

    placement = Placement(mode, tuple(tuple(g) for g in gpus))
    logger.info("Placement (%s): %s", mode.value, placement.names())
    return placement


def workloads(scenario: Scenario, placement: Placement) -> list[GpuWorkload]:
    """Per-GPU workloads; a model's load is split evenly over its hosts."""
    rates = scenario.rates()
    multipliers = {m.name: list(m.rate_multipliers) for m in scenario.models}
    scheduler = scenario.scheduler
    if placement.mode is PlacementMode.EXCLUSIVE:
        # A dedicated GPU time-shares nothing but its own model
        scheduler = SchedulerKind.TEMPORAL

    result = []
    for index, models in enumerate(placement.gpus):
        names = {m.name for m in models}
        result.append(
            GpuWorkload(
                index=index,
                models=list(models),
                rates={
                    name: rates[name] / len(placement.hosts(name)) for name in sorted(names)
                },
                scheduler=scheduler,
                multipliers={name: multipliers[name] for name in sorted(names)},
                reconfigurations=[
                    e for e in scenario.reconfigurations if e.model in names
                ],
            )
        )
    return result


def run(scenario: Scenario, config: Config | None = None) -> SimMetrics:
    """Simulate ``scenario`` on one or more GPUs.

    Raises:
        ScenarioError: The models of some GPU cannot be scheduled
        PlacementError: The models cannot be placed on the GPUs
    """
    config = config or get_config()
    models = scenario.configs()
    profiles = scenario.profiles()

    if scenario.gpu_count == 1 and scenario.placement is PlacementMode.PACK:
        placement = Placement(PlacementMode.PACK, (tuple(models),))
    else:
        placement = place_multi_gpu(
            models, scenario.gpu_count, scenario.placement, profiles, config.scheduler
        )

    seed = scenario.seed if scenario.seed is not None else 0
    streams = np.random.SeedSequence(seed).spawn(placement.gpu_count)
    parts = [
        simulate_gpu(scenario, workload, profiles, stream, config)
        for workload, stream in zip(workloads(scenario, placement), streams)
    ]
    if len(parts) == 1:
        return parts[0]
    return merge_metrics(scenario.name, parts)


__all__ = ["Placement", "place_multi_gpu", "workloads", "run"]
