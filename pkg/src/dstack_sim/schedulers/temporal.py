"""Temporal sharing: one model owns the whole GPU at a time."""

from collections.abc import Sequence

from ..exceptions import SchedulerError
from ..logging import get_logger
from ..profiles import ModelConfig
from .timeline import CAPACITY, ms_to_slots
from .types import ScheduledRun, SessionSchedule

logger = get_logger(__name__)

DEFAULT_SLOT_MS = 0.1


def temporal_schedule(
    models: Sequence[ModelConfig],
    session_len_ms: float | None = None,
    slot_ms: float = DEFAULT_SLOT_MS,
) -> SessionSchedule:
    """Split the session into back-to-back slices proportional to each model's SLO.

    Within its slice a model repeats runs of its runtime while they fit. Each
    run reserves 100% of the GPU but only the knee% counts as useful work.
    """
    if not models:
        raise SchedulerError("Temporal schedule needs at least one model")
    session = session_len_ms if session_len_ms is not None else max(m.slo_ms for m in models)

    schedule = SessionSchedule("temporal", session, slot_ms, tuple(models))
    total_slo = sum(m.slo_ms for m in models)
    n_slots = schedule.timeline.n_slots

    cumulative = 0.0
    boundary = 0
    for m in models:
        cumulative += m.slo_ms
        slice_end = round(n_slots * cumulative / total_slo)
        run_slots = ms_to_slots(m.runtime_ms, slot_ms)
        start = boundary
        repeat = 0
        while start + run_slots <= slice_end:
            schedule.add_run(
                ScheduledRun(
                    model=m.name,
                    start_ms=round(start * slot_ms, 6),
                    duration_ms=m.runtime_ms,
                    gpu_pct=CAPACITY,
                    batch=m.batch,
                    busy_pct=m.knee_pct,
                    repeat=repeat,
                )
            )
            start += run_slots
            repeat += 1
        if repeat == 0:
            logger.debug(
                "'%s' (%s ms) does not fit its %.2f ms slice",
                m.name,
                m.runtime_ms,
                (slice_end - boundary) * slot_ms,
            )
        boundary = slice_end

    return schedule


__all__ = ["DEFAULT_SLOT_MS", "temporal_schedule"]
