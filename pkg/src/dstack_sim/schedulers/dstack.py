"""Spatio-temporal D-STACK session construction.

The session is as long as the largest SLO. Every model must finish one run
inside each of its consecutive SLO windows. Placement happens in two passes:

1. EDF: jobs ordered by (deadline, runtime, name) take the earliest start in
   their window where the GPU has room for their knee%.
2. Repair: if any job did not fit, walk the models from tightest SLO,
   push each model's odd-numbered repeats as late as their window allows,
   then retry the leftover jobs as late as possible.

When repair leaves jobs unplaced, the whole set is retried below the knee
with runtimes re-read from the profiles.

For serving, ``close_gaps`` adds extra runs so that no request of a model
waits longer than ``SLO - runtime`` for its next start, and
``serving_candidates`` lists the closed plans at the knee and at every
reduced GPU% step.
"""

import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass

from ..config import SchedulerConfig
from ..exceptions import AdmissionError, SchedulerError
from ..logging import get_logger
from ..profiles import ModelConfig, ModelProfile, latency
from .timeline import ms_to_slot_index, ms_to_slots
from .types import Oversubscribed, PlacementStep, ScheduledRun, SessionSchedule

logger = get_logger(__name__)

MIN_REDUCED_PCT = 10


@dataclass(frozen=True)
class Job:
    """The ``repeat``-th execution of a model, due by the end of its window."""

    model: ModelConfig
    repeat: int

    @property
    def window_ms(self) -> tuple[float, float]:
        slo = self.model.slo_ms
        return self.repeat * slo, (self.repeat + 1) * slo

    @property
    def deadline_ms(self) -> float:
        return self.window_ms[1]

    @property
    def key(self) -> tuple[str, int]:
        return self.model.name, self.repeat


def admit(models: Sequence[ModelConfig]) -> None:
    """Reject model sets that can never meet their SLOs.

    Raises:
        SchedulerError: Empty set or duplicate names
        AdmissionError: A model whose runtime exceeds its SLO
    """
    if not models:
        raise SchedulerError("D-STACK schedule needs at least one model")
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise SchedulerError("Model names must be unique", details={"models": names})
    for m in models:
        if m.runtime_ms > m.slo_ms:
            raise AdmissionError(
                f"'{m.name}' runtime {m.runtime_ms} ms exceeds its SLO of {m.slo_ms} ms",
                model=m.name,
            )


def session_length(models: Sequence[ModelConfig]) -> float:
    return max(m.slo_ms for m in models)


def repeats(model: ModelConfig, session_len_ms: float) -> int:
    """Runs of ``model`` per session."""
    return max(1, math.floor(round(session_len_ms / model.slo_ms, 9)))


def _window_slots(schedule: SessionSchedule, job: Job) -> tuple[int, int, int]:
    """(earliest start, latest start, length) in slots for ``job``."""
    start_ms, end_ms = job.window_ms
    length = ms_to_slots(job.model.runtime_ms, schedule.slot_ms)
    lo = schedule.timeline.slot_at(start_ms)
    hi = min(schedule.timeline.slot_at(end_ms), schedule.timeline.n_slots) - length
    return lo, hi, length


def start_late(
    schedule: SessionSchedule,
    model: ModelConfig,
    window: tuple[float, float],
    repeat: int | None = None,
) -> ScheduledRun | None:
    """Latest start in ``window`` that keeps every covered slot within capacity.

    Scans backward from ``window_end - runtime`` in slot steps and skips
    starts that would overlap another run of the same model. Returns None
    when nothing fits.
    """
    length = ms_to_slots(model.runtime_ms, schedule.slot_ms)
    lo = schedule.timeline.slot_at(window[0])
    hi = min(schedule.timeline.slot_at(window[1]), schedule.timeline.n_slots) - length
    start = schedule.timeline.latest_fit(
        model.knee_pct, length, lo, hi, avoid=schedule.intervals_for(model.name)
    )
    if start is None:
        return None
    return schedule.run_at(model, start, repeat=repeat)


def _earliest(schedule: SessionSchedule, job: Job) -> ScheduledRun | None:
    lo, hi, length = _window_slots(schedule, job)
    start = schedule.timeline.earliest_fit(
        job.model.knee_pct, length, lo, hi, avoid=schedule.intervals_for(job.model.name)
    )
    if start is None:
        return None
    return schedule.run_at(job.model, start, repeat=job.repeat)


def _edf_key(job: Job) -> tuple[float, float, str, int]:
    return job.deadline_ms, job.model.runtime_ms, job.model.name, job.repeat


def _place(models: Sequence[ModelConfig], slot_ms: float) -> tuple[SessionSchedule, list[Job]]:
    """Run both passes and return the schedule plus any jobs left over."""
    session = session_length(models)
    schedule = SessionSchedule("dstack", session, slot_ms, tuple(models))
    jobs = sorted(
        (Job(m, k) for m in models for k in range(repeats(m, session))),
        key=_edf_key,
    )

    overflow: list[Job] = []
    placed: dict[tuple[str, int], ScheduledRun] = {}
    for index, job in enumerate(jobs):
        pending = tuple(j.deadline_ms for j in jobs[index:])
        run = _earliest(schedule, job)
        if run is None:
            overflow.append(job)
            schedule.trace.append(
                PlacementStep(
                    "overflow", job.model.name, job.repeat, job.deadline_ms, None, pending
                )
            )
            continue
        schedule.add_run(run)
        placed[job.key] = run
        schedule.trace.append(
            PlacementStep(
                "edf", job.model.name, job.repeat, job.deadline_ms, run.start_ms, pending
            )
        )

    if not overflow:
        return schedule, overflow

    logger.debug("EDF left %d job(s) unplaced; pushing alternate repeats late", len(overflow))
    for model in sorted(models, key=lambda m: (m.slo_ms, m.runtime_ms, m.name)):
        for job in jobs:
            if job.model is not model or job.repeat % 2 == 0 or job.key not in placed:
                continue
            original = placed[job.key]
            schedule.remove_run(original)
            moved = start_late(schedule, model, job.window_ms, repeat=job.repeat)
            run = moved if moved is not None else original
            schedule.add_run(run)
            placed[job.key] = run
            schedule.trace.append(
                PlacementStep(
                    "start_late", model.name, job.repeat, job.deadline_ms, run.start_ms
                )
            )

        still_over: list[Job] = []
        for job in overflow:
            run = start_late(schedule, job.model, job.window_ms, repeat=job.repeat)
            if run is None:
                still_over.append(job)
                continue
            schedule.add_run(run)
            placed[job.key] = run
            schedule.trace.append(
                PlacementStep(
                    "start_late", job.model.name, job.repeat, job.deadline_ms, run.start_ms
                )
            )
        overflow = still_over
        if not overflow:
            break

    return schedule, overflow


def reduce_models(
    models: Sequence[ModelConfig],
    profiles: Mapping[str, ModelProfile],
    factor: float,
) -> list[ModelConfig] | None:
    """Models at ``factor`` x knee with runtimes read from their profiles.

    Returns None when a model has no profile or would miss its SLO.
    """
    reduced = []
    for m in models:
        profile = profiles.get(m.name)
        if profile is None or m.batch > profile.max_batch:
            return None
        pct = max(MIN_REDUCED_PCT, round(m.knee_pct * factor))
        runtime = latency(profile, pct, m.batch)
        if runtime > m.slo_ms:
            return None
        reduced.append(m.with_gpu(float(pct), runtime))
    return reduced


def _cyclic_gaps(starts: Sequence[int], n_slots: int) -> Iterator[tuple[int, int, bool]]:
    """(start, next start, wraps) for consecutive starts around the session."""
    for i, start in enumerate(starts):
        last = i + 1 == len(starts)
        yield start, starts[0] + n_slots if last else starts[i + 1], last


def _gap_start(
    schedule: SessionSchedule, model: ModelConfig, start: int, nxt: int, wraps: bool, gap: int
) -> int | None:
    """Latest start that splits the gap ``[start, nxt)`` of ``model``."""
    timeline = schedule.timeline
    n = timeline.n_slots
    length = ms_to_slots(model.runtime_ms, schedule.slot_ms)
    hi = min(start + gap, nxt - length, n - length)
    found = timeline.latest_fit(model.knee_pct, length, start + length, hi)
    if found is None and wraps:
        # Past the session end: place before the first run instead
        hi = min(nxt - n - length, start + gap - n)
        found = timeline.latest_fit(model.knee_pct, length, max(0, start + length - n), hi)
    return found


def close_gaps(schedule: SessionSchedule) -> int:
    """Add runs until consecutive starts of each model are at most ``SLO - runtime`` apart.

    A request arriving just after a start then still has a run that ends
    inside its SLO. Models whose runtime is more than half their SLO are
    left alone, as are gaps with no room at the model's GPU%.

    Returns:
        Number of runs added
    """
    added = 0
    for model in sorted(schedule.models, key=lambda m: (m.slo_ms, m.runtime_ms, m.name)):
        length = ms_to_slots(model.runtime_ms, schedule.slot_ms)
        gap = ms_to_slot_index(model.slo_ms - model.runtime_ms, schedule.slot_ms)
        if gap < length:
            continue
        while True:
            starts = [s for s, _ in schedule.intervals_for(model.name)]
            if not starts:
                break
            for start, nxt, wraps in _cyclic_gaps(starts, schedule.timeline.n_slots):
                if nxt - start <= gap:
                    continue
                found = _gap_start(schedule, model, start, nxt, wraps, gap)
                if found is not None:
                    schedule.add_run(schedule.run_at(model, found))
                    added += 1
                    break
            else:
                break
    if added:
        logger.debug("Closed start gaps with %d extra run(s)", added)
    return added


def serving_candidates(
    models: Sequence[ModelConfig],
    profiles: Mapping[str, ModelProfile],
    config: SchedulerConfig | None = None,
) -> Iterator[tuple[float, SessionSchedule, list[tuple[str, int]]]]:
    """Gap-closed plans at the knee and at each reduced GPU% step.

    Yields:
        (knee factor, schedule, unplaced job keys); oversubscribed plans
        are included with their unplaced jobs dropped
    """
    config = config or SchedulerConfig()
    admit(models)
    for factor in (1.0, *config.reduced_gpu_steps):
        scaled = list(models) if factor == 1.0 else reduce_models(models, profiles, factor)
        if scaled is None:
            continue
        schedule, overflow = _place(scaled, config.slot_ms)
        close_gaps(schedule)
        yield factor, schedule, [job.key for job in overflow]


def dstack_schedule(
    models: Sequence[ModelConfig],
    profiles: Mapping[str, ModelProfile] | None = None,
    config: SchedulerConfig | None = None,
) -> SessionSchedule | Oversubscribed:
    """Build one D-STACK session for ``models``.

    Args:
        models: Admitted models at their knee%
        profiles: Latency grids used for the below-knee fallback
        config: Slot width and fallback steps

    Returns:
        The schedule, or Oversubscribed when no placement meets every window.
        Its partial schedule is the attempt that left the fewest jobs out.

    Raises:
        AdmissionError: A model's runtime exceeds its SLO
    """
    config = config or SchedulerConfig()
    admit(models)

    schedule, overflow = _place(models, config.slot_ms)
    if not overflow:
        return schedule

    logger.info(
        "Knee placement oversubscribed (%d job(s) unplaced); trying reduced GPU%%",
        len(overflow),
    )
    best, best_overflow = schedule, overflow
    if profiles:
        for factor in config.reduced_gpu_steps:
            reduced = reduce_models(models, profiles, factor)
            if reduced is None:
                continue
            candidate, left = _place(reduced, config.slot_ms)
            if not left:
                logger.info("Placed every model at %.0f%% of its knee", factor * 100)
                return candidate
            if len(left) < len(best_overflow):
                best, best_overflow = candidate, left

    unplaced = [job.key for job in best_overflow]
    idle = sorted(m.name for m in models if not best.runs_for(m.name))
    logger.warning(
        "Oversubscribed: %d job(s) cannot meet their window%s",
        len(unplaced),
        f"; no static run for {', '.join(idle)}" if idle else "",
    )
    return Oversubscribed(
        models=tuple(models),
        unplaced=unplaced,
        partial=best,
        reason=f"{len(unplaced)} job(s) do not fit any SLO window",
    )


def is_schedulable(
    models: Sequence[ModelConfig],
    profiles: Mapping[str, ModelProfile] | None = None,
    config: SchedulerConfig | None = None,
) -> bool:
    """Whether ``models`` admit and schedule on one GPU without oversubscription."""
    try:
        result = dstack_schedule(models, profiles, config)
    except AdmissionError:
        return False
    return isinstance(result, SessionSchedule)


__all__ = [
    "Job",
    "admit",
    "session_length",
    "repeats",
    "start_late",
    "reduce_models",
    "close_gaps",
    "serving_candidates",
    "dstack_schedule",
    "is_schedulable",
]
