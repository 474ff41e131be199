"""Opportunistic dynamic fill of idle GPU capacity.

Whenever a run completes (and at session start) ready models are tried in
order of how few runs they got recently. A model that fits the residual
capacity at its knee gets the longest contiguous slice available before its
next scheduled run, and the largest batch whose latency fits that slice.
"""

import heapq
from collections import Counter, deque
from collections.abc import Mapping

from ..exceptions import SchedulerError
from ..logging import get_logger
from ..profiles import ModelProfile, latency
from .timeline import Timeline, ms_to_slots
from .types import RunKind, ScheduledRun, SessionSchedule

logger = get_logger(__name__)


class Scoreboard:
    """Per-model run counts over the last ``window`` sessions."""

    def __init__(self, window: int = 10) -> None:
        if window < 1:
            raise SchedulerError("Scoreboard window must hold at least one session")
        self.window = window
        self._sessions: deque[Counter[str]] = deque(maxlen=window)
        self.start_session()

    def start_session(self) -> None:
        """Open a new session, dropping the oldest once the window is full."""
        self._sessions.append(Counter())

    def record(self, model: str, runs: int = 1) -> None:
        self._sessions[-1][model] += runs

    def count(self, model: str) -> int:
        return sum(session[model] for session in self._sessions)

    def counts(self) -> dict[str, int]:
        total: Counter[str] = Counter()
        for session in self._sessions:
            total.update(session)
        return dict(total)

    def __len__(self) -> int:
        return len(self._sessions)


def is_active(schedule: SessionSchedule, model: str, slot: int) -> bool:
    """Whether ``model`` has a run covering ``slot``."""
    return any(start <= slot < end for start, end in schedule.intervals_for(model))


def _next_start(schedule: SessionSchedule, model: str, slot: int) -> int:
    starts = [start for start, _ in schedule.intervals_for(model) if start >= slot]
    return min(starts, default=schedule.timeline.n_slots)


def _batch_candidates(profile: ModelProfile, cap: int | None) -> list[int]:
    batches = [b for b in profile.batches if cap is None or b <= cap]
    if cap is not None and cap <= profile.max_batch and cap not in batches:
        batches.append(cap)
    return sorted(batches)


def plan_fill(
    timeline: Timeline,
    slot: int,
    pct: float,
    limit: int,
    profile: ModelProfile,
    cap: int | None = None,
) -> tuple[int, float] | None:
    """Largest batch whose latency at ``pct`` fits the free slice starting at ``slot``.

    The slice ends where capacity runs out or at ``limit``, whichever is first.

    Returns:
        (batch, latency_ms), or None when nothing fits
    """
    if not timeline.fits(slot, 1, pct):
        return None
    span = timeline.free_span(slot, pct, limit=limit)
    chosen: tuple[int, float] | None = None
    for batch in _batch_candidates(profile, cap):
        duration = latency(profile, pct, batch)
        if ms_to_slots(duration, timeline.slot_ms) <= span:
            chosen = (batch, duration)
    return chosen


def dynamic_fill(
    schedule: SessionSchedule,
    scoreboard: Scoreboard,
    ready: Mapping[str, int | None],
    now_ms: float,
    profiles: Mapping[str, ModelProfile],
) -> list[ScheduledRun]:
    """Add fill runs starting at ``now_ms`` for models with pending work.

    Args:
        schedule: Session being filled; fill runs are added to it
        scoreboard: Recent run counts; fill runs are recorded here
        ready: Model name to pending request count (None for unbounded)
        now_ms: Trigger time; runs start at the next slot boundary
        profiles: Latency grids of the ready models

    Returns:
        The runs added, in priority order
    """
    slot = ms_to_slots(now_ms, schedule.slot_ms)
    if slot >= schedule.timeline.n_slots:
        return []

    added: list[ScheduledRun] = []
    for name in sorted(ready, key=lambda n: (scoreboard.count(n), n)):
        cap = ready[name]
        if cap is not None and cap <= 0:
            continue
        profile = profiles.get(name)
        if profile is None or is_active(schedule, name, slot):
            continue
        model = schedule.model(name)
        chosen = plan_fill(
            schedule.timeline,
            slot,
            model.knee_pct,
            _next_start(schedule, name, slot),
            profile,
            cap,
        )
        if chosen is None:
            continue

        batch, duration = chosen
        run = ScheduledRun(
            model=name,
            start_ms=round(slot * schedule.slot_ms, 6),
            duration_ms=duration,
            gpu_pct=model.knee_pct,
            batch=batch,
            kind=RunKind.FILL,
        )
        schedule.add_run(run)
        scoreboard.record(name)
        added.append(run)
        logger.debug("Fill '%s' b=%d at %.1f ms for %.3f ms", name, batch, run.start_ms, duration)
    return added


def session_backlog(
    schedule: SessionSchedule, rates: Mapping[str, float]
) -> dict[str, int]:
    """Requests per model arriving in one session beyond what static runs serve."""
    backlog = {}
    for m in schedule.models:
        arriving = round(rates.get(m.name, 0.0) * schedule.session_len_ms / 1000.0)
        static = sum(r.batch for r in schedule.runs_for(m.name) if r.kind is RunKind.STATIC)
        backlog[m.name] = max(0, arriving - static)
    return backlog


def fill_session(
    schedule: SessionSchedule,
    profiles: Mapping[str, ModelProfile],
    rates: Mapping[str, float] | None = None,
    scoreboard: Scoreboard | None = None,
) -> SessionSchedule:
    """Replay dynamic fill over a static session.

    Fill is attempted at session start and at every run completion. With
    ``rates`` each model only fills up to its per-session backlog; without
    them every model is always ready.

    Returns:
        A copy of ``schedule`` with the fill runs added
    """
    filled = schedule.copy()
    filled.kind = f"{schedule.kind}+fill"
    if scoreboard is None:
        scoreboard = Scoreboard()
    else:
        scoreboard.start_session()
    for run in filled.runs:
        scoreboard.record(run.model)

    pending: dict[str, int | None]
    if rates is None:
        pending = {m.name: None for m in filled.models}
    else:
        pending = dict(session_backlog(filled, rates))

    triggers = [0.0] + [r.end_ms for r in filled.runs]
    heapq.heapify(triggers)
    seen: set[float] = set()
    while triggers:
        now = heapq.heappop(triggers)
        if now in seen or now >= filled.session_len_ms:
            continue
        seen.add(now)
        ready = {name: cap for name, cap in pending.items() if cap is None or cap > 0}
        for run in dynamic_fill(filled, scoreboard, ready, now, profiles):
            cap = pending[run.model]
            if cap is not None:
                pending[run.model] = cap - run.batch
            heapq.heappush(triggers, run.end_ms)
    return filled


__all__ = [
    "Scoreboard",
    "is_active",
    "plan_fill",
    "dynamic_fill",
    "session_backlog",
    "fill_session",
]
