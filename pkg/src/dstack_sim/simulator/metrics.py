"""Simulation results: per-model counters, GPU utilization and request traces."""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import numpy.typing as npt

from ..formatters import Table
from ..schedulers.types import RunKind

METRIC_COLUMNS = ("metric", "model", "value")
UTILIZATION_COLUMNS = ("slot_ms", "gpu", "gpu_pct")
SESSION_COLUMNS = ("session", "start_ms", "model", "arrived", "completed", "utilization_pct")
HISTOGRAM_COLUMNS = ("low_ms", "high_ms", "count")
REQUEST_COLUMNS = (
    "request_id",
    "model",
    "arrival_ms",
    "deadline_ms",
    "start_ms",
    "end_ms",
    "outcome",
)
RUN_COLUMNS = (
    "gpu",
    "model",
    "start_ms",
    "end_ms",
    "gpu_pct",
    "batch",
    "kind",
    "session",
    "delayed",
)

ALL_MODELS = "all"
HISTOGRAM_BINS = 20


class Outcome(str, Enum):
    """What finally happened to a request."""

    IN_SLO = "in_slo"
    LATE = "late"
    UNSERVED = "unserved"  # still waiting at the end with its deadline passed
    RESIDUAL = "residual"  # still waiting at the end within its deadline


@dataclass(frozen=True)
class RequestRecord:
    request_id: int
    model: str
    arrival_us: int
    deadline_us: int
    start_us: int | None
    end_us: int | None
    outcome: Outcome

    @property
    def latency_ms(self) -> float | None:
        if self.end_us is None:
            return None
        return (self.end_us - self.arrival_us) / 1000.0


@dataclass(frozen=True)
class ExecutedRun:
    """A run that actually started on a GPU."""

    gpu: int
    model: str
    start_us: int
    end_us: int
    gpu_pct: float
    batch: int
    kind: RunKind
    session: int
    delayed: bool = False

    @property
    def start_ms(self) -> float:
        return self.start_us / 1000.0

    @property
    def end_ms(self) -> float:
        return self.end_us / 1000.0


@dataclass
class ModelMetrics:
    """Request counters of one model.

    ``arrived == in_slo + late + unserved + residual`` once a run is finished.
    """

    model: str
    arrived: int = 0
    in_slo: int = 0
    late: int = 0
    unserved: int = 0
    residual: int = 0
    runs: int = 0
    skipped_runs: int = 0
    latencies_ms: list[float] = field(default_factory=list, repr=False)

    @property
    def completed(self) -> int:
        return self.in_slo + self.late

    @property
    def violations(self) -> int:
        return self.late + self.unserved

    def conserved(self) -> bool:
        return self.arrived == self.in_slo + self.late + self.unserved + self.residual

    def merge(self, other: "ModelMetrics") -> None:
        self.arrived += other.arrived
        self.in_slo += other.in_slo
        self.late += other.late
        self.unserved += other.unserved
        self.residual += other.residual
        self.runs += other.runs
        self.skipped_runs += other.skipped_runs
        self.latencies_ms.extend(other.latencies_ms)


@dataclass
class SessionMetrics:
    """Arrivals, completions and useful GPU% of one session."""

    index: int
    start_ms: float
    arrived: dict[str, int] = field(default_factory=dict)
    completed: dict[str, int] = field(default_factory=dict)
    utilization: float = 0.0

    @property
    def total_completed(self) -> int:
        return sum(self.completed.values())


@dataclass
class SimMetrics:
    """Everything a simulation reports."""

    scenario: str
    duration_s: float
    slot_ms: float
    models: dict[str, ModelMetrics]
    gpu_busy: list[npt.NDArray[np.float64]] = field(default_factory=list, repr=False)
    sessions: list[SessionMetrics] = field(default_factory=list, repr=False)
    runs: list[ExecutedRun] = field(default_factory=list, repr=False)
    requests: list[RequestRecord] = field(default_factory=list, repr=False)
    rejected_reconfigurations: int = 0

    # =========================================================================
    # Aggregates
    # =========================================================================

    def throughput(self, model: str) -> float:
        """Completed requests per second."""
        return self.models[model].completed / self.duration_s

    @property
    def total_throughput(self) -> float:
        return sum(m.completed for m in self.models.values()) / self.duration_s

    @property
    def arrived(self) -> int:
        return sum(m.arrived for m in self.models.values())

    @property
    def violations(self) -> int:
        return sum(m.violations for m in self.models.values())

    @property
    def violations_per_s(self) -> float:
        return self.violations / self.duration_s

    @property
    def miss_fraction(self) -> float:
        """Share of arrived requests that were late or unserved."""
        return self.violations / self.arrived if self.arrived else 0.0

    @property
    def gpu_utilization(self) -> list[float]:
        """Time-averaged useful GPU% per GPU."""
        return [float(busy.mean()) if busy.size else 0.0 for busy in self.gpu_busy]

    @property
    def mean_utilization(self) -> float:
        per_gpu = self.gpu_utilization
        return float(np.mean(per_gpu)) if per_gpu else 0.0

    def conserved(self) -> bool:
        return all(m.conserved() for m in self.models.values())

    def latency_histogram(
        self, bins: int = HISTOGRAM_BINS
    ) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.int64]]:
        """(bin edges, counts) of completed-request latencies in ms."""
        latencies = np.array(
            [x for m in self.models.values() for x in m.latencies_ms], dtype=np.float64
        )
        if latencies.size == 0:
            return np.zeros(bins + 1), np.zeros(bins, dtype=np.int64)
        counts, edges = np.histogram(latencies, bins=bins, range=(0.0, float(latencies.max())))
        return edges, counts.astype(np.int64)

    # =========================================================================
    # Tables
    # =========================================================================

    def metrics_table(self) -> Table:
        table = Table(METRIC_COLUMNS)
        for name, m in self.models.items():
            lat = np.asarray(m.latencies_ms, dtype=np.float64)
            table.append("arrived", name, m.arrived)
            table.append("completed", name, m.completed)
            table.append("in_slo", name, m.in_slo)
            table.append("late", name, m.late)
            table.append("unserved", name, m.unserved)
            table.append("residual", name, m.residual)
            table.append("violations", name, m.violations)
            table.append("runs", name, m.runs)
            table.append("skipped_runs", name, m.skipped_runs)
            table.append("throughput_rps", name, m.completed / self.duration_s)
            table.append("violations_per_s", name, m.violations / self.duration_s)
            table.append("mean_latency_ms", name, float(lat.mean()) if lat.size else 0.0)
            table.append(
                "p99_latency_ms", name, float(np.percentile(lat, 99)) if lat.size else 0.0
            )
        table.append("throughput_rps", ALL_MODELS, self.total_throughput)
        table.append("violations_per_s", ALL_MODELS, self.violations_per_s)
        table.append("miss_fraction", ALL_MODELS, self.miss_fraction)
        for gpu, util in enumerate(self.gpu_utilization):
            table.append(f"gpu{gpu}_utilization_pct", ALL_MODELS, util)
        table.append("mean_utilization_pct", ALL_MODELS, self.mean_utilization)
        table.append("rejected_reconfigurations", ALL_MODELS, self.rejected_reconfigurations)
        return table

    def utilization_table(self) -> Table:
        """Useful GPU% per slot and GPU."""
        table = Table(UTILIZATION_COLUMNS)
        for gpu, busy in enumerate(self.gpu_busy):
            for slot, pct in enumerate(busy):
                table.append(round(slot * self.slot_ms, 6), gpu, float(pct))
        return table

    def session_table(self) -> Table:
        table = Table(SESSION_COLUMNS)
        for s in self.sessions:
            for name in self.models:
                table.append(
                    s.index,
                    s.start_ms,
                    name,
                    s.arrived.get(name, 0),
                    s.completed.get(name, 0),
                    s.utilization,
                )
        return table

    def histogram_table(self) -> Table:
        edges, counts = self.latency_histogram()
        table = Table(HISTOGRAM_COLUMNS)
        for i, count in enumerate(counts):
            table.append(float(edges[i]), float(edges[i + 1]), int(count))
        return table

    def runs_table(self) -> Table:
        table = Table(RUN_COLUMNS)
        for r in sorted(self.runs, key=lambda r: (r.gpu, r.start_us, r.model)):
            table.append(
                r.gpu,
                r.model,
                r.start_ms,
                r.end_ms,
                r.gpu_pct,
                r.batch,
                r.kind.value,
                r.session,
                r.delayed,
            )
        return table

    def requests_table(self) -> Table:
        table = Table(REQUEST_COLUMNS)
        for r in sorted(self.requests, key=lambda r: (r.arrival_us, r.model, r.request_id)):
            table.append(
                r.request_id,
                r.model,
                r.arrival_us / 1000.0,
                r.deadline_us / 1000.0,
                None if r.start_us is None else r.start_us / 1000.0,
                None if r.end_us is None else r.end_us / 1000.0,
                r.outcome.value,
            )
        return table


def session_utilization(
    busy: npt.NDArray[np.float64], starts: Sequence[int], length: int
) -> list[float]:
    """Mean of ``busy`` over each session of ``length`` slots starting at ``starts``."""
    result = []
    for start in starts:
        window = busy[start : start + length]
        result.append(float(window.mean()) if window.size else 0.0)
    return result


def merge_metrics(scenario: str, parts: Iterable[SimMetrics]) -> SimMetrics:
    """Combine per-GPU results into one cluster-wide result."""
    parts = list(parts)
    if not parts:
        raise ValueError("Nothing to merge")
    first = parts[0]
    merged = SimMetrics(
        scenario=scenario,
        duration_s=first.duration_s,
        slot_ms=first.slot_ms,
        models={},
    )
    sessions: dict[int, SessionMetrics] = {}
    session_utils: dict[int, list[float]] = {}
    for part in parts:
        for name, m in part.models.items():
            target = merged.models.setdefault(name, ModelMetrics(name))
            target.merge(m)
        merged.gpu_busy.extend(part.gpu_busy)
        merged.runs.extend(part.runs)
        merged.requests.extend(part.requests)
        merged.rejected_reconfigurations += part.rejected_reconfigurations
        for s in part.sessions:
            target_s = sessions.setdefault(s.index, SessionMetrics(s.index, s.start_ms))
            for name, n in s.arrived.items():
                target_s.arrived[name] = target_s.arrived.get(name, 0) + n
            for name, n in s.completed.items():
                target_s.completed[name] = target_s.completed.get(name, 0) + n
            session_utils.setdefault(s.index, []).append(s.utilization)
    for index, s in sessions.items():
        s.utilization = float(np.mean(session_utils[index]))
    merged.sessions = [sessions[i] for i in sorted(sessions)]
    return merged


__all__ = [
    "METRIC_COLUMNS",
    "UTILIZATION_COLUMNS",
    "SESSION_COLUMNS",
    "HISTOGRAM_COLUMNS",
    "REQUEST_COLUMNS",
    "RUN_COLUMNS",
    "Outcome",
    "RequestRecord",
    "ExecutedRun",
    "ModelMetrics",
    "SessionMetrics",
    "SimMetrics",
    "session_utilization",
    "merge_metrics",
]
