"""Online knee discovery by binary search over a model's latency profile.

A model without a known knee starts at a nominal GPU%. Each probe moves it
to one grid GPU% and measures how much one more grid step would improve
latency; the knee is the first GPU% where that improvement drops below the
threshold.
"""

from dataclasses import dataclass, field

from ..config import SimulatorConfig
from ..exceptions import ProfileError
from ..logging import get_logger
from ..profiles import ModelProfile, latency
from .scenario import ReconfigEvent, ReconfigMode

logger = get_logger(__name__)

START_PCT = 30.0
IMPROVEMENT_THRESHOLD = 0.05


@dataclass(frozen=True)
class ProbeStep:
    gpu_pct: int
    latency_ms: float
    improvement: float


@dataclass
class KneeProbeResult:
    knee_pct: int
    batch: int
    steps: list[ProbeStep] = field(default_factory=list)

    @property
    def probes(self) -> int:
        return len(self.steps)

    @property
    def probed_pcts(self) -> list[int]:
        return [s.gpu_pct for s in self.steps]


def _improvement(profile: ModelProfile, index: int, batch: int) -> tuple[float, float]:
    """(latency at grid point ``index``, relative gain of the next grid step)."""
    grid = profile.gpu_pcts
    here = latency(profile, grid[index], batch)
    if index + 1 >= len(grid):
        return here, 0.0
    there = latency(profile, grid[index + 1], batch)
    return here, (here - there) / here


def online_knee_probe(
    profile: ModelProfile,
    batch: int | None = None,
    start_pct: float = START_PCT,
    threshold: float = IMPROVEMENT_THRESHOLD,
) -> KneeProbeResult:
    """Binary-search the smallest grid GPU% whose next step gains less than ``threshold``.

    The first probe is at the grid point closest to ``start_pct``.

    Args:
        profile: Latency grid of the model
        batch: Batch to probe with (default: the profile's largest batch)
        start_pct: GPU% of the first probe
        threshold: Relative latency gain below which growing stops paying off
    """
    batch = batch if batch is not None else profile.max_batch
    if not 0 < threshold < 1:
        raise ProfileError(f"Improvement threshold must lie in (0, 1), got {threshold}")

    grid = profile.gpu_pcts
    first = min(range(len(grid)), key=lambda i: (abs(grid[i] - start_pct), grid[i]))
    lo, hi = 0, len(grid) - 1
    result = KneeProbeResult(knee_pct=grid[hi], batch=batch)
    mid = first
    while lo < hi:
        if not lo <= mid < hi:
            mid = (lo + hi) // 2
        here, gain = _improvement(profile, mid, batch)
        result.steps.append(ProbeStep(grid[mid], here, gain))
        logger.debug("Probe %d%%: %.3f ms, next step gains %.1f%%", grid[mid], here, gain * 100)
        if gain < threshold:
            hi = mid
        else:
            lo = mid + 1
        mid = (lo + hi) // 2

    result.knee_pct = grid[lo]
    logger.info(
        "Knee of '%s' at %d%% after %d probe(s)", profile.name, result.knee_pct, result.probes
    )
    return result


def knee_probe_reconfigurations(
    result: KneeProbeResult,
    model: str,
    start_ms: float = 0.0,
    config: SimulatorConfig | None = None,
) -> list[ReconfigEvent]:
    """Overlap-mode reconfigurations a probe sequence costs, ending at the knee.

    Events are spaced by one load time plus the switchover gap so that no two
    are in flight at once.
    """
    config = config or SimulatorConfig()
    spacing = config.load_time_ms + config.switchover_ms
    targets = result.probed_pcts
    if not targets or targets[-1] != result.knee_pct:
        targets = [*targets, result.knee_pct]
    return [
        ReconfigEvent(
            time_ms=start_ms + i * spacing,
            model=model,
            gpu_pct=float(pct),
            mode=ReconfigMode.OVERLAP,
        )
        for i, pct in enumerate(targets)
    ]


__all__ = [
    "START_PCT",
    "IMPROVEMENT_THRESHOLD",
    "ProbeStep",
    "KneeProbeResult",
    "online_knee_probe",
    "knee_probe_reconfigurations",
]
