"""Simulated GPU: resident model instances and GPU% reconfiguration.

A reconfiguration loads a standby instance at the new GPU%. In downtime
mode the model cannot run while the standby loads. In overlap mode the
active instance keeps serving until the standby is loaded, after which the
model pauses for a short switchover gap.
"""

from dataclasses import dataclass, field

from ..config import SimulatorConfig
from ..exceptions import ReconfigurationError
from ..logging import get_logger
from ..profiles import ModelConfig, ModelProfile, latency
from ..schedulers.timeline import CAPACITY, EPS, Timeline
from .scenario import ReconfigEvent, ReconfigMode

logger = get_logger(__name__)

Window = tuple[int, int]  # [start, end) in microseconds


def ms_to_us(ms: float) -> int:
    return round(ms * 1000)


@dataclass(frozen=True)
class PendingReconfiguration:
    """A standby instance being loaded."""

    event: ReconfigEvent
    started_us: int
    done_us: int
    new_config: ModelConfig


@dataclass
class Instance:
    """The serving instance of one model."""

    config: ModelConfig
    downtime: Window | None = None
    switchover: Window | None = None
    pending: PendingReconfiguration | None = None

    @property
    def gpu_pct(self) -> float:
        return self.config.knee_pct

    def available(self, t_us: int) -> bool:
        """Whether the instance can start a run at ``t_us``."""
        for window in (self.downtime, self.switchover):
            if window is not None and window[0] <= t_us < window[1]:
                return False
        return True

    def in_switchover(self, t_us: int) -> bool:
        return self.switchover is not None and self.switchover[0] <= t_us < self.switchover[1]


@dataclass
class GpuState:
    """One GPU: its occupancy timeline and resident instances."""

    index: int
    timeline: Timeline
    instances: dict[str, Instance] = field(default_factory=dict)

    @classmethod
    def create(
        cls, index: int, models: list[ModelConfig], length_ms: float, slot_ms: float
    ) -> "GpuState":
        return cls(
            index=index,
            timeline=Timeline.for_duration(length_ms, slot_ms),
            instances={m.name: Instance(m) for m in models},
        )

    def config(self, model: str) -> ModelConfig:
        return self.instances[model].config

    def available(self, model: str, t_us: int) -> bool:
        return self.instances[model].available(t_us)

    def resident_pct(self) -> float:
        return sum(inst.gpu_pct for inst in self.instances.values())

    def within_capacity(self) -> bool:
        """Whether no slot of the timeline is reserved past 100%."""
        return self.timeline.max() <= CAPACITY + EPS


def apply_reconfiguration(
    gpu: GpuState,
    event: ReconfigEvent,
    now_us: int,
    profile: ModelProfile | None,
    config: SimulatorConfig | None = None,
) -> PendingReconfiguration | None:
    """Start moving ``event.model`` to ``event.gpu_pct``.

    Returns:
        The pending reconfiguration, or None when the GPU% is unchanged

    Raises:
        ReconfigurationError: Model not resident, a reconfiguration already
            in flight, no latency profile, or the new runtime misses the SLO
    """
    config = config or SimulatorConfig()
    instance = gpu.instances.get(event.model)
    if instance is None:
        raise ReconfigurationError(
            f"'{event.model}' is not resident on GPU {gpu.index}",
            details={"resident": sorted(gpu.instances)},
        )
    if instance.pending is not None:
        raise ReconfigurationError(
            f"'{event.model}' is already moving to {instance.pending.event.gpu_pct}%",
            details={"done_ms": instance.pending.done_us / 1000.0},
        )
    if event.gpu_pct == instance.gpu_pct:
        logger.debug("'%s' already runs at %.1f%%", event.model, event.gpu_pct)
        return None
    if profile is None:
        raise ReconfigurationError(
            f"'{event.model}' has no latency profile to rate {event.gpu_pct}% with"
        )

    current = instance.config
    runtime = latency(profile, event.gpu_pct, current.batch)
    if runtime > current.slo_ms:
        raise ReconfigurationError(
            f"'{event.model}' at {event.gpu_pct}% takes {runtime:.3f} ms, "
            f"over its {current.slo_ms} ms SLO"
        )

    load_done = now_us + ms_to_us(config.load_time_ms)
    if event.mode is ReconfigMode.DOWNTIME:
        instance.downtime = (now_us, load_done)
        done = load_done
    else:
        done = load_done + ms_to_us(config.switchover_ms)
        instance.switchover = (load_done, done)

    pending = PendingReconfiguration(
        event=event,
        started_us=now_us,
        done_us=done,
        new_config=current.with_gpu(event.gpu_pct, runtime),
    )
    instance.pending = pending
    logger.info(
        "Reconfiguring '%s' %.1f%% -> %.1f%% (%s, done at %.1f ms)",
        event.model,
        current.knee_pct,
        event.gpu_pct,
        event.mode.value,
        done / 1000.0,
    )
    return pending


def complete_reconfiguration(gpu: GpuState, model: str) -> ModelConfig:
    """Switch ``model`` to its loaded standby and return the new operating point."""
    instance = gpu.instances[model]
    if instance.pending is None:
        raise ReconfigurationError(f"'{model}' has no reconfiguration in flight")
    instance.config = instance.pending.new_config
    instance.pending = None
    return instance.config


__all__ = [
    "ms_to_us",
    "PendingReconfiguration",
    "Instance",
    "GpuState",
    "apply_reconfiguration",
    "complete_reconfiguration",
]
