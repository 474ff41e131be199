"""Value types shared by the schedule constructors."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import numpy.typing as npt

from ..formatters import Table
from ..profiles import ModelConfig
from .timeline import Timeline

SCHEDULE_COLUMNS = ("model", "start_ms", "duration_ms", "gpu_pct", "batch")
OCCUPANCY_COLUMNS = ("slot_ms", "gpu_pct")


class RunKind(str, Enum):
    """Origin of a scheduled run."""

    STATIC = "static"
    FILL = "fill"


@dataclass(frozen=True)
class ScheduledRun:
    """One non-preemptive execution of a model.

    ``gpu_pct`` is the allocation reserved on the timeline; ``busy_pct`` is
    the share counted as useful work when it differs (temporal slices
    reserve the whole GPU but only use the knee).
    """

    model: str
    start_ms: float
    duration_ms: float
    gpu_pct: float
    batch: int
    busy_pct: float | None = None
    repeat: int | None = None
    kind: RunKind = RunKind.STATIC

    @property
    def end_ms(self) -> float:
        return self.start_ms + self.duration_ms

    @property
    def utilized_pct(self) -> float:
        return self.gpu_pct if self.busy_pct is None else self.busy_pct


@dataclass(frozen=True)
class PlacementStep:
    """One decision of a constructor, kept so EDF order can be replayed."""

    phase: str  # "edf", "start_late" or "overflow"
    model: str
    repeat: int
    deadline_ms: float
    start_ms: float | None
    pending_deadlines: tuple[float, ...] = ()


@dataclass
class SessionSchedule:
    """Runs placed over one session plus the resulting occupancy."""

    kind: str
    session_len_ms: float
    slot_ms: float
    models: tuple[ModelConfig, ...]
    runs: list[ScheduledRun] = field(default_factory=list)
    trace: list[PlacementStep] = field(default_factory=list)
    timeline: Timeline = field(init=False)

    def __post_init__(self) -> None:
        self.models = tuple(self.models)
        self.timeline = Timeline.for_duration(self.session_len_ms, self.slot_ms)
        runs, self.runs = self.runs, []
        for run in runs:
            self.add_run(run)

    def slot_span(self, run: ScheduledRun) -> tuple[int, int]:
        """(start slot, length in slots) covered by ``run``."""
        return self.timeline.slot_at(run.start_ms), self.timeline.to_slots(run.duration_ms)

    def run_at(
        self,
        model: ModelConfig,
        start_slot: int,
        repeat: int | None = None,
        kind: RunKind = RunKind.STATIC,
    ) -> ScheduledRun:
        """Run of ``model`` at its configured GPU%, batch and runtime."""
        return ScheduledRun(
            model=model.name,
            start_ms=round(start_slot * self.slot_ms, 6),
            duration_ms=model.runtime_ms,
            gpu_pct=model.knee_pct,
            batch=model.batch,
            repeat=repeat,
            kind=kind,
        )

    def add_run(self, run: ScheduledRun) -> None:
        start, length = self.slot_span(run)
        self.timeline.add(start, length, run.gpu_pct)
        self.runs.append(run)

    def remove_run(self, run: ScheduledRun) -> None:
        start, length = self.slot_span(run)
        self.timeline.remove(start, length, run.gpu_pct)
        self.runs.remove(run)

    def runs_for(self, model: str) -> list[ScheduledRun]:
        return sorted((r for r in self.runs if r.model == model), key=lambda r: r.start_ms)

    def intervals_for(self, model: str) -> list[tuple[int, int]]:
        """Slot intervals [start, end) already used by ``model``."""
        spans = [self.slot_span(r) for r in self.runs_for(model)]
        return [(s, s + n) for s, n in spans]

    def model(self, name: str) -> ModelConfig:
        for m in self.models:
            if m.name == name:
                return m
        raise KeyError(name)

    def busy(self) -> npt.NDArray[np.float64]:
        """Per-slot GPU% doing useful work."""
        busy = np.zeros(self.timeline.n_slots, dtype=np.float64)
        for run in self.runs:
            start, length = self.slot_span(run)
            busy[start : start + length] += run.utilized_pct
        return busy

    def utilization(self) -> float:
        """Time-averaged useful GPU% over the session."""
        if not self.runs or self.timeline.n_slots == 0:
            return 0.0
        return float(self.busy().mean())

    def max_occupancy(self) -> float:
        return self.timeline.max()

    def copy(self) -> "SessionSchedule":
        return SessionSchedule(
            kind=self.kind,
            session_len_ms=self.session_len_ms,
            slot_ms=self.slot_ms,
            models=self.models,
            runs=list(self.runs),
            trace=list(self.trace),
        )

    def schedule_table(self) -> Table:
        table = Table(SCHEDULE_COLUMNS)
        for run in sorted(self.runs, key=lambda r: (r.start_ms, r.model)):
            table.append(run.model, run.start_ms, run.duration_ms, run.gpu_pct, run.batch)
        return table

    def occupancy_table(self) -> Table:
        table = Table(OCCUPANCY_COLUMNS)
        for i, pct in enumerate(self.timeline.occupancy):
            table.append(round(i * self.slot_ms, 6), pct)
        return table


@dataclass
class Oversubscribed:
    """A model set that cannot meet every SLO window on one GPU.

    ``partial`` is the attempt (knee or reduced GPU%) that left the fewest
    jobs unplaced, with those jobs dropped. A model may have no run in it at
    all; the simulator serves such models through dynamic fill.
    """

    models: tuple[ModelConfig, ...]
    unplaced: list[tuple[str, int]]
    partial: SessionSchedule
    reason: str = ""


def utilization(schedule: SessionSchedule) -> float:
    """Mean GPU% over the session; zero for an empty schedule."""
    return schedule.utilization()


__all__ = [
    "SCHEDULE_COLUMNS",
    "OCCUPANCY_COLUMNS",
    "RunKind",
    "ScheduledRun",
    "PlacementStep",
    "SessionSchedule",
    "Oversubscribed",
    "utilization",
]
