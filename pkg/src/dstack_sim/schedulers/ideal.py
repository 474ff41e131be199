"""Kernel-granularity schedulers and the ideal oracle.

Each model is a chain of kernels with their own GPU% and duration. Time is
split into slots; a kernel may only run once its predecessor finished. The
ideal scheduler may preempt at every slot boundary and, per slot, runs the
subset of eligible kernels whose GPU% sum is largest without exceeding 100.

The same kernel traces drive three reference policies under continuous
demand (every model restarts as soon as an inference finishes):

- temporal: one model owns the GPU for a whole inference, round robin;
- GSLICE: fixed spatial partitions; a kernel wider than its partition runs
  in waves, one kernel duration per partition-sized wave;
- D-STACK: whole inferences are started EDF without preemption, reserving
  their knee% or, when less is free but at least ``min_share`` of the knee,
  the free share with kernels run in waves.
"""

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field, ValidationError

from ..exceptions import ScenarioError, SearchGuardExceededError
from ..formatters import Table
from ..logging import get_logger
from ..profiles import ModelConfig
from .spatial import static_spatial
from .timeline import CAPACITY, EPS, ms_to_slots

logger = get_logger(__name__)

DEFAULT_GUARD = 10**6
DEFAULT_MIN_SHARE = 0.5
SHIPPED_PACKAGE = "dstack_sim.scenarios"
COMPARISON_COLUMNS = ("scheduler", "utilization", "throughput", "vs_ideal")


class KernelSpec(BaseModel):
    """One kernel of a trace."""

    gpu_pct: float = Field(gt=0, le=100)
    duration_ms: float = Field(gt=0)


class KernelModel(BaseModel):
    """A model as a kernel chain plus its model-level knee.

    When ``slo_ms`` is omitted the deadline is twice the runtime.
    """

    name: str = Field(min_length=1)
    knee_pct: float = Field(gt=0, le=100)
    slo_ms: float | None = Field(default=None, gt=0)
    kernels: list[KernelSpec] = Field(min_length=1)

    @property
    def runtime_ms(self) -> float:
        return sum(k.duration_ms for k in self.kernels)

    @property
    def deadline_ms(self) -> float:
        return self.slo_ms if self.slo_ms is not None else 2 * self.runtime_ms

    def as_config(self) -> ModelConfig:
        return ModelConfig(
            name=self.name,
            knee_pct=self.knee_pct,
            slo_ms=self.deadline_ms,
            batch=1,
            runtime_ms=self.runtime_ms,
        )


class KernelInstance(BaseModel):
    """A set of kernel traces compared under the four policies."""

    name: str = "instance"
    models: list[KernelModel] = Field(min_length=1)


def load_instance(path: str | Path) -> KernelInstance:
    """Read a kernel-trace instance from JSON, or a shipped instance by name.

    Raises:
        FileNotFoundError: Neither a file nor a shipped instance
        ScenarioError: The file does not validate
    """
    path = Path(path)
    if path.exists():
        text = path.read_text(encoding="utf-8")
    else:
        shipped = resources.files(SHIPPED_PACKAGE) / "instances" / f"{path.stem}.json"
        if not shipped.is_file():
            raise FileNotFoundError(f"Kernel instance not found: {path}")
        text = shipped.read_text(encoding="utf-8")
    try:
        return KernelInstance.model_validate_json(text)
    except ValidationError as e:
        raise ScenarioError(
            f"Invalid kernel instance {path}: {e.error_count()} error(s)",
            path=str(path),
            details={"errors": e.errors(include_url=False)},
        ) from e


@dataclass
class KernelScheduleResult:
    """Occupancy and completed inferences of one policy."""

    scheduler: str
    slot_ms: float
    occupancy: npt.NDArray[np.float64]
    completions: dict[str, int] = field(default_factory=dict)

    @property
    def span_ms(self) -> float:
        return self.occupancy.size * self.slot_ms

    @property
    def utilization(self) -> float:
        """Mean GPU% over the span."""
        return float(self.occupancy.mean()) if self.occupancy.size else 0.0

    @property
    def throughput(self) -> float:
        """Completed inferences per second over the span."""
        if self.span_ms == 0:
            return 0.0
        return sum(self.completions.values()) / (self.span_ms / 1000.0)


@dataclass
class _Cursor:
    """Progress of one model through its kernel chain."""

    name: str
    knee: float
    deadline_slots: int
    kernels: list[tuple[float, int]]  # (gpu_pct, slots)
    kernel: int = 0
    remaining: int = 0
    release: int = 0
    done: int = 0
    running: bool = False
    pct: float = 0.0
    finished: bool = False

    def __post_init__(self) -> None:
        self.remaining = self.kernels[0][1]

    @property
    def width(self) -> float:
        return self.kernels[self.kernel][0]

    @property
    def deadline(self) -> int:
        return self.release + self.deadline_slots

    def advance(self, slot: int) -> bool:
        """Run one slot; True when that completes the inference."""
        self.remaining -= 1
        if self.remaining > 0:
            return False
        self.kernel += 1
        if self.kernel < len(self.kernels):
            self.remaining = self.kernels[self.kernel][1]
            return False
        self.kernel = 0
        self.remaining = self.kernels[0][1]
        self.done += 1
        self.release = slot + 1
        return True


def _models(traces: KernelInstance | Sequence[KernelModel]) -> list[KernelModel]:
    return list(traces.models if isinstance(traces, KernelInstance) else traces)


def _kernel_shape(
    model: KernelModel, cap: float | None, slot_ms: float
) -> list[tuple[float, int]]:
    """(GPU%, slots) per kernel within ``cap``; wider kernels run in equal waves."""
    shape = []
    for k in model.kernels:
        waves = 1 if cap is None else max(1, math.ceil(round(k.gpu_pct / cap, 6)))
        shape.append((k.gpu_pct / waves, ms_to_slots(k.duration_ms * waves, slot_ms)))
    return shape


def _cursors(
    models: Sequence[KernelModel],
    slot_ms: float,
    widths: dict[str, float] | None = None,
) -> list[_Cursor]:
    """Cursors for ``models``; ``widths`` caps each model's GPU%."""
    return [
        _Cursor(
            name=m.name,
            knee=m.knee_pct,
            deadline_slots=ms_to_slots(m.deadline_ms, slot_ms),
            kernels=_kernel_shape(m, widths[m.name] if widths is not None else None, slot_ms),
        )
        for m in models
    ]


def _result(
    scheduler: str, slot_ms: float, occupancy: npt.NDArray[np.float64], cursors: list[_Cursor]
) -> KernelScheduleResult:
    return KernelScheduleResult(
        scheduler=scheduler,
        slot_ms=slot_ms,
        occupancy=occupancy,
        completions={c.name: c.done for c in cursors},
    )


def search_estimate(
    traces: KernelInstance | Sequence[KernelModel],
    slot_ms: float,
    horizon_ms: float | None,
) -> int:
    """Upper bound on subsets the ideal search examines."""
    models = _models(traces)
    if horizon_ms is None:
        slots = sum(ms_to_slots(k.duration_ms, slot_ms) for m in models for k in m.kernels)
    else:
        slots = ms_to_slots(horizon_ms, slot_ms)
    return slots * 2 ** len(models)


def _best_subset(heads: list[_Cursor]) -> list[_Cursor]:
    """Subset with the largest GPU% sum within capacity; ties favour urgent deadlines."""
    ordered = sorted(heads, key=lambda c: (c.deadline, c.name))
    best: list[_Cursor] = []
    best_key: tuple[float, tuple[int, ...]] = (0.0, ())
    for mask in itertools.product((1, 0), repeat=len(ordered)):
        width = sum(c.width for c, bit in zip(ordered, mask, strict=True) if bit)
        if width > CAPACITY + EPS:
            continue
        key = (round(width, 9), mask)
        if key > best_key:
            best_key = key
            best = [c for c, bit in zip(ordered, mask, strict=True) if bit]
    return best


def ideal_schedule(
    traces: KernelInstance | Sequence[KernelModel],
    slot_ms: float = 0.1,
    horizon_ms: float | None = None,
    guard: int = DEFAULT_GUARD,
) -> KernelScheduleResult:
    """Exhaustive per-slot kernel packing.

    Without a horizon every model runs one inference and the span ends when
    the last kernel finishes. With a horizon models restart continuously.

    Raises:
        SearchGuardExceededError: The search would examine more than ``guard`` subsets
    """
    models = _models(traces)
    estimate = search_estimate(models, slot_ms, horizon_ms)
    if estimate > guard:
        raise SearchGuardExceededError(
            f"Ideal search needs about {estimate} subset evaluations (limit {guard})",
            estimate=estimate,
            limit=guard,
        )

    cursors = _cursors(models, slot_ms)
    one_shot = horizon_ms is None
    limit = estimate // 2 ** len(models) if one_shot else ms_to_slots(horizon_ms or 0, slot_ms)
    occupancy = np.zeros(limit, dtype=np.float64)

    slot = 0
    while slot < limit:
        heads = [c for c in cursors if not c.finished]
        if one_shot and not heads:
            break
        for c in _best_subset(heads):
            occupancy[slot] += c.width
            if c.advance(slot) and one_shot:
                c.finished = True
        slot += 1

    if one_shot:
        occupancy = occupancy[:slot]
    logger.debug("Ideal schedule over %d slots: %.1f%%", slot, float(occupancy.mean()))
    return _result("ideal", slot_ms, occupancy, cursors)


def temporal_kernels(
    traces: KernelInstance | Sequence[KernelModel],
    horizon_ms: float | None,
    slot_ms: float = 0.1,
) -> KernelScheduleResult:
    """Round-robin whole inferences, one model on the GPU at a time.

    Without a horizon every model runs one inference.
    """
    cursors = _cursors(_models(traces), slot_ms)
    if horizon_ms is None:
        limit = sum(slots for c in cursors for _, slots in c.kernels)
    else:
        limit = ms_to_slots(horizon_ms, slot_ms)
    occupancy = np.zeros(limit, dtype=np.float64)
    current = 0
    for slot in range(occupancy.size):
        c = cursors[current]
        occupancy[slot] = c.width
        if c.advance(slot):
            current = (current + 1) % len(cursors)
    return _result("temporal", slot_ms, occupancy, cursors)


def gslice_kernels(
    traces: KernelInstance | Sequence[KernelModel], horizon_ms: float, slot_ms: float = 0.1
) -> KernelScheduleResult:
    """Every model runs continuously inside its static partition."""
    models = _models(traces)
    partitions = static_spatial([m.as_config() for m in models])
    cursors = _cursors(models, slot_ms, widths=partitions)
    occupancy = np.zeros(ms_to_slots(horizon_ms, slot_ms), dtype=np.float64)
    for slot in range(occupancy.size):
        for c in cursors:
            occupancy[slot] += c.width
            c.advance(slot)
    return _result("gslice", slot_ms, occupancy, cursors)


def dstack_kernels(
    traces: KernelInstance | Sequence[KernelModel],
    horizon_ms: float | None,
    slot_ms: float = 0.1,
    min_share: float = DEFAULT_MIN_SHARE,
) -> KernelScheduleResult:
    """Non-preemptive inferences started in EDF order at their knee% or a reduced share.

    Without a horizon every model runs one inference and the span ends when
    the last one finishes. ``min_share`` of 1.0 admits knee reservations only.

    Raises:
        ValueError: ``min_share`` outside (0, 1]
    """
    if not 0.0 < min_share <= 1.0:
        raise ValueError("min_share must be in (0, 1]")
    models = {m.name: m for m in _models(traces)}
    cursors = _cursors(list(models.values()), slot_ms)
    one_shot = horizon_ms is None
    if one_shot:
        # Something runs in every slot; narrowest shares bound the span
        limit = sum(
            slots
            for m in models.values()
            for _, slots in _kernel_shape(m, m.knee_pct * min_share, slot_ms)
        )
    else:
        limit = ms_to_slots(horizon_ms or 0, slot_ms)
    occupancy = np.zeros(limit, dtype=np.float64)

    reserved = 0.0
    slot = 0
    while slot < limit:
        waiting = [c for c in cursors if not (c.running or c.finished)]
        if one_shot and not waiting and not any(c.running for c in cursors):
            break
        for c in sorted(waiting, key=lambda c: (c.deadline, c.name)):
            pct = min(c.knee, CAPACITY - reserved)
            if pct < c.knee * min_share - EPS or pct <= EPS:
                continue
            c.kernels = _kernel_shape(models[c.name], pct if pct < c.knee else None, slot_ms)
            c.remaining = c.kernels[0][1]
            c.pct = pct
            c.running = True
            reserved += pct
        for c in cursors:
            if not c.running:
                continue
            occupancy[slot] += c.width
            if c.advance(slot):
                c.running = False
                c.finished = one_shot
                reserved -= c.pct
        slot += 1

    if one_shot:
        occupancy = occupancy[:slot]
    return _result("dstack", slot_ms, occupancy, cursors)


@dataclass
class Comparison:
    """Four policies on the same kernel traces."""

    results: dict[str, KernelScheduleResult]

    @property
    def dstack_ideal_ratio(self) -> float:
        ideal = self.results["ideal"].throughput
        return self.results["dstack"].throughput / ideal if ideal else 0.0

    def table(self) -> Table:
        ideal = self.results["ideal"].throughput
        table = Table(COMPARISON_COLUMNS)
        for name, result in self.results.items():
            table.append(
                name,
                result.utilization,
                result.throughput,
                result.throughput / ideal if ideal else 0.0,
            )
        return table


def compare_schedulers(
    traces: KernelInstance | Sequence[KernelModel],
    horizon_ms: float = 100.0,
    slot_ms: float = 0.1,
    guard: int = DEFAULT_GUARD,
    min_share: float = DEFAULT_MIN_SHARE,
) -> Comparison:
    """Run temporal, GSLICE, D-STACK and ideal under continuous demand."""
    return Comparison(
        results={
            "temporal": temporal_kernels(traces, horizon_ms, slot_ms),
            "gslice": gslice_kernels(traces, horizon_ms, slot_ms),
            "dstack": dstack_kernels(traces, horizon_ms, slot_ms, min_share),
            "ideal": ideal_schedule(traces, slot_ms, horizon_ms, guard),
        }
    )


__all__ = [
    "DEFAULT_GUARD",
    "DEFAULT_MIN_SHARE",
    "COMPARISON_COLUMNS",
    "KernelSpec",
    "KernelModel",
    "KernelInstance",
    "load_instance",
    "KernelScheduleResult",
    "search_estimate",
    "ideal_schedule",
    "temporal_kernels",
    "gslice_kernels",
    "dstack_kernels",
    "Comparison",
    "compare_schedulers",
]
