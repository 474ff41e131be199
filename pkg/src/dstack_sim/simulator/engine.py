"""Single-GPU discrete-event engine.

Requests arrive per model, wait in FIFO queues and are served by runs.
Time is kept in integer microseconds and every run starts on a slot
boundary. The static plan of a session is committed one session ahead so
that dynamic fill can see the next scheduled start of every model.

With D-STACK and fill on, the plan is picked by dry-running every
gap-closed serving candidate (knee, then each reduced GPU% step) over a
short calibration window and keeping the one with the fewest violations.
A static run that starts with fewer requests than its batch finishes as
soon as the profile says and hands the rest of its reservation back.
"""

import math
from collections import deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from ..config import Config, get_config
from ..exceptions import AdmissionError, ReconfigurationError, ScenarioError
from ..logging import get_scenario_logger
from ..profiles import ModelConfig, ModelProfile, latency
from ..schedulers import (
    Oversubscribed,
    RunKind,
    ScheduledRun,
    Scoreboard,
    SessionSchedule,
    dstack_schedule,
    static_spatial,
    temporal_schedule,
)
from ..schedulers.dstack import serving_candidates
from ..schedulers.fill import plan_fill
from ..schedulers.timeline import ms_to_slots
from .events import Event, EventKind, EventQueue
from .gpu import GpuState, apply_reconfiguration, complete_reconfiguration, ms_to_us
from .metrics import (
    ExecutedRun,
    ModelMetrics,
    Outcome,
    RequestRecord,
    SessionMetrics,
    SimMetrics,
    session_utilization,
)
from .scenario import ArrivalProcess, ReconfigEvent, Scenario, SchedulerKind

# Sessions committed beyond the current one
_LOOKAHEAD = 1


@dataclass
class GpuWorkload:
    """Models, offered load and reconfigurations assigned to one GPU."""

    index: int
    models: list[ModelConfig]
    rates: dict[str, float]
    scheduler: SchedulerKind = SchedulerKind.DSTACK
    multipliers: dict[str, list[float]] = field(default_factory=dict)
    reconfigurations: list[ReconfigEvent] = field(default_factory=list)

    def rate(self, model: str, session: int) -> float:
        steps = self.multipliers.get(model, [])
        scale = steps[session] if session < len(steps) else 1.0
        return self.rates.get(model, 0.0) * scale


@dataclass(slots=True)
class Request:
    request_id: int
    model: str
    arrival_us: int
    deadline_us: int


@dataclass
class _Planned:
    """A committed static run waiting for its start."""

    run: ScheduledRun
    session: int
    start_slot: int
    length: int
    delayed: bool = False

    @property
    def end_slot(self) -> int:
        return self.start_slot + self.length


@dataclass
class _Batch:
    """Requests bound to one run."""

    model: str
    requests: list[Request]
    start_us: int
    duration_us: int
    gpu_pct: float
    busy_pct: float
    kind: RunKind
    session: int
    delayed: bool = False

    @property
    def end_us(self) -> int:
        return self.start_us + self.duration_us


class GpuSimulator:
    """Event loop for one GPU.

    Args:
        scenario: Run-wide settings (duration, arrivals, fill, tracing)
        workload: What this GPU serves
        profiles: Latency grids by model name
        seed: Seed sequence for this GPU's arrival streams
        config: Scheduler and simulator settings
        plan: Fixed static plan; skips planning and calibration
    """

    def __init__(
        self,
        scenario: Scenario,
        workload: GpuWorkload,
        profiles: Mapping[str, ModelProfile],
        seed: np.random.SeedSequence,
        config: Config | None = None,
        plan: SessionSchedule | None = None,
    ) -> None:
        self.scenario = scenario
        self.workload = workload
        self.profiles = profiles
        self.config = config or get_config()
        self.log = get_scenario_logger(scenario.name, gpu=workload.index)

        self.slot_us = self.config.scheduler.slot_us
        self.slot_ms = self.config.scheduler.slot_ms
        self.end_us = round(scenario.duration_s * 1_000_000)
        self.names = [m.name for m in workload.models]

        streams = seed.spawn(len(self.names) + 1)
        self.rngs = {name: np.random.default_rng(s) for name, s in zip(self.names, streams)}
        self.calibration_seed = streams[-1]

        if plan is not None:
            self.plan: SessionSchedule | None = plan
        else:
            self.plan = self._build_plan(workload.models) if workload.models else None
        if self.plan is not None:
            self.session_slots = self.plan.timeline.n_slots
        else:
            slo = max((m.slo_ms for m in workload.models), default=scenario.duration_s * 1000)
            self.session_slots = ms_to_slots(slo, self.slot_ms)
        self.session_us = self.session_slots * self.slot_us
        self.n_sessions = max(1, math.ceil(self.end_us / self.session_us))

        length_ms = (self.n_sessions + _LOOKAHEAD + 1) * self.session_slots * self.slot_ms
        self.gpu = GpuState.create(workload.index, workload.models, length_ms, self.slot_ms)
        self.events = EventQueue()
        self.scoreboard = Scoreboard(self.config.scheduler.scoreboard_window)
        self.gslice_pct = static_spatial(workload.models) if workload.models else {}

        self.next_arrival: dict[str, float | None] = dict.fromkeys(self.names)
        self.next_id = 0

        self.queues: dict[str, deque[Request]] = {name: deque() for name in self.names}
        self.in_flight: dict[str, _Batch | None] = dict.fromkeys(self.names)
        self.pending_static: dict[str, list[_Planned]] = {name: [] for name in self.names}
        self.committed = 0  # sessions committed so far

        self.metrics = {name: ModelMetrics(name) for name in self.names}
        self.sessions = [
            SessionMetrics(k, k * self.session_us / 1000.0) for k in range(self.n_sessions)
        ]
        n_busy = math.ceil(self.end_us / self.slot_us)
        self.busy: npt.NDArray[np.float64] = np.zeros(n_busy, dtype=np.float64)
        self.runs: list[ExecutedRun] = []
        self.requests: list[RequestRecord] = []
        self.rejected = 0

    # =========================================================================
    # Planning
    # =========================================================================

    @property
    def fills(self) -> bool:
        return self.scenario.fill and self.workload.scheduler is SchedulerKind.DSTACK

    def _unserved(self, plan: SessionSchedule) -> list[str]:
        """Models that get neither a static run nor fill."""
        return [
            m.name
            for m in plan.models
            if not plan.runs_for(m.name) and not (self.fills and m.name in self.profiles)
        ]

    def _build_plan(self, models: Sequence[ModelConfig]) -> SessionSchedule | None:
        kind = self.workload.scheduler
        if kind is SchedulerKind.GSLICE:
            return None
        if kind is SchedulerKind.TEMPORAL:
            return temporal_schedule(models, slot_ms=self.slot_ms)
        if self.fills and self.config.simulator.calibration_ms > 0:
            return self._calibrate(models)
        try:
            result = dstack_schedule(models, self.profiles, self.config.scheduler)
        except AdmissionError as e:
            raise ScenarioError(e.message, details={"model": e.details.get("model")}) from e
        if isinstance(result, Oversubscribed):
            unserved = self._unserved(result.partial)
            if unserved:
                raise ScenarioError(
                    f"Models on GPU {self.workload.index} cannot be scheduled: {result.reason}",
                    details={"unplaced": result.unplaced, "unserved": unserved},
                )
            self.log.warning(
                "Oversubscribed; admitting a partial schedule with %d job(s) dropped",
                len(result.unplaced),
            )
            return result.partial
        return result

    def _calibrate(self, models: Sequence[ModelConfig]) -> SessionSchedule:
        """Serving candidate with the fewest violations over a dry run."""
        try:
            candidates = [
                (factor, plan, unplaced)
                for factor, plan, unplaced in serving_candidates(
                    models, self.profiles, self.config.scheduler
                )
                if not self._unserved(plan)
            ]
        except AdmissionError as e:
            raise ScenarioError(e.message, details={"model": e.details.get("model")}) from e
        if not candidates:
            raise ScenarioError(
                f"Models on GPU {self.workload.index} cannot be scheduled",
                details={"models": [m.name for m in models]},
            )
        if len(candidates) == 1:
            return candidates[0][1]

        dry_scenario = self.scenario.model_copy(
            update={
                "name": f"{self.scenario.name}-calibration",
                "duration_s": self.config.simulator.calibration_ms / 1000.0,
                "record_requests": False,
            }
        )
        dry_workload = GpuWorkload(
            index=self.workload.index,
            models=list(models),
            rates=self.workload.rates,
            scheduler=self.workload.scheduler,
            multipliers=self.workload.multipliers,
        )
        scores = []
        for factor, plan, _ in candidates:
            # Same arrivals for every candidate
            seed = np.random.SeedSequence(
                self.calibration_seed.entropy, spawn_key=self.calibration_seed.spawn_key
            )
            dry = GpuSimulator(dry_scenario, dry_workload, self.profiles, seed, self.config, plan)
            scores.append(dry.run().violations)
            self.log.debug(
                "Serving plan at %.0f%% of knee: %d violation(s) in the dry run",
                factor * 100,
                scores[-1],
            )

        best = min(range(len(candidates)), key=lambda i: (scores[i], i))
        factor, plan, unplaced = candidates[best]
        self.log.info(
            "Serving at %.0f%% of knee (%d violation(s) in the dry run, %d job(s) dropped)",
            factor * 100,
            scores[best],
            len(unplaced),
        )
        return plan

    def _commit(self, session: int) -> None:
        """Reserve the static runs of ``session`` on the GPU timeline."""
        self.committed = max(self.committed, session + 1)
        if self.plan is None or session >= self.n_sessions:
            return
        offset = session * self.session_slots
        for run in self.plan.runs:
            start, length = self.plan.slot_span(run)
            planned = _Planned(run, session, offset + start, length)
            if planned.start_slot * self.slot_us > self.end_us:
                continue
            self.gpu.timeline.add(planned.start_slot, length, run.gpu_pct)
            self.pending_static[run.model].append(planned)
            self.events.push(planned.start_slot * self.slot_us, EventKind.RUN_START, planned)
        for runs in self.pending_static.values():
            runs.sort(key=lambda p: p.start_slot)

    def _release(self, planned: _Planned) -> None:
        self.gpu.timeline.remove(planned.start_slot, planned.length, planned.run.gpu_pct)

    def _next_static(self, model: str, slot: int) -> int:
        starts = [p.start_slot for p in self.pending_static[model] if p.start_slot >= slot]
        return min(starts, default=self.committed * self.session_slots)

    def _static_covers(self, model: str, slot: int) -> bool:
        return any(p.start_slot <= slot < p.end_slot for p in self.pending_static[model])

    # =========================================================================
    # Arrivals
    # =========================================================================

    def _gap_us(self, model: str, mean_us: float) -> float:
        if self.scenario.arrival is ArrivalProcess.DETERMINISTIC:
            return mean_us
        sim = self.config.simulator
        return mean_us * float(self.rngs[model].uniform(sim.jitter_low, sim.jitter_high))

    def _generate_arrivals(self, session: int) -> None:
        lo = session * self.session_us
        hi = min((session + 1) * self.session_us, self.end_us + 1)
        for name in self.names:
            rate = self.workload.rate(name, session)
            if rate <= 0:
                self.next_arrival[name] = None
                continue
            mean_us = 1_000_000 / rate
            t = self.next_arrival[name]
            if t is None or t < lo:
                t = lo + self._gap_us(name, mean_us)
            while t < hi:
                self.events.push(round(t), EventKind.ARRIVAL, name)
                t += self._gap_us(name, mean_us)
            self.next_arrival[name] = t

    def _session_of(self, t_us: int) -> int:
        return min(t_us // self.session_us, self.n_sessions - 1)

    # =========================================================================
    # Runs
    # =========================================================================

    def _take(self, model: str, batch: int) -> list[Request]:
        queue = self.queues[model]
        return [queue.popleft() for _ in range(min(batch, len(queue)))]

    def _start(self, batch: _Batch) -> None:
        self.in_flight[batch.model] = batch
        self.events.push(batch.end_us, EventKind.RUN_END, batch)
        first = batch.start_us // self.slot_us
        last = math.ceil(batch.end_us / self.slot_us)
        self.busy[first:last] += batch.busy_pct
        self.metrics[batch.model].runs += 1
        self.runs.append(
            ExecutedRun(
                gpu=self.workload.index,
                model=batch.model,
                start_us=batch.start_us,
                end_us=batch.end_us,
                gpu_pct=batch.gpu_pct,
                batch=len(batch.requests),
                kind=batch.kind,
                session=batch.session,
                delayed=batch.delayed,
            )
        )

    def _try_delay(self, planned: _Planned, t_us: int) -> bool:
        """Move a static run one slot later, past a switchover gap."""
        model = planned.run.model
        start = planned.start_slot + 1
        end = start + planned.length
        if end > self._next_static(model, start) or not self.gpu.timeline.fits(
            start, planned.length, planned.run.gpu_pct
        ):
            return False
        if not self.gpu.available(model, start * self.slot_us):
            return False
        moved = _Planned(planned.run, planned.session, start, planned.length, delayed=True)
        self.gpu.timeline.add(start, planned.length, planned.run.gpu_pct)
        self.pending_static[model].append(moved)
        self.pending_static[model].sort(key=lambda p: p.start_slot)
        self.events.push(start * self.slot_us, EventKind.RUN_START, moved)
        self.log.debug("Delayed '%s' run at %.1f ms by one slot", model, t_us / 1000.0)
        return True

    def _static_duration(self, run: ScheduledRun, batch: int) -> float:
        """Planned duration, or less when D-STACK runs a short batch."""
        profile = self.profiles.get(run.model)
        if (
            self.workload.scheduler is not SchedulerKind.DSTACK
            or profile is None
            or batch > profile.max_batch
        ):
            return run.duration_ms
        return min(run.duration_ms, latency(profile, run.gpu_pct, batch))

    def _on_static_start(self, planned: _Planned, t_us: int) -> None:
        model = planned.run.model
        self.pending_static[model].remove(planned)
        self._release(planned)
        instance = self.gpu.instances[model]
        if not instance.available(t_us):
            if not (instance.in_switchover(t_us) and self._try_delay(planned, t_us)):
                self.metrics[model].skipped_runs += 1
            return
        if not self.queues[model] or self.in_flight[model] is not None:
            return

        run = planned.run
        requests = self._take(model, run.batch)
        duration = self._static_duration(run, len(requests))
        self.gpu.timeline.add(
            planned.start_slot, ms_to_slots(duration, self.slot_ms), run.gpu_pct
        )
        self.scoreboard.record(model)
        self._start(
            _Batch(
                model=model,
                requests=requests,
                start_us=t_us,
                duration_us=ms_to_us(duration),
                gpu_pct=run.gpu_pct,
                busy_pct=run.utilized_pct,
                kind=RunKind.STATIC,
                session=planned.session,
                delayed=planned.delayed,
            )
        )

    def _on_run_end(self, batch: _Batch, t_us: int) -> None:
        self.in_flight[batch.model] = None
        metrics = self.metrics[batch.model]
        session = self.sessions[self._session_of(t_us)]
        session.completed[batch.model] = session.completed.get(batch.model, 0) + len(
            batch.requests
        )
        for req in batch.requests:
            in_slo = t_us <= req.deadline_us
            if in_slo:
                metrics.in_slo += 1
            else:
                metrics.late += 1
            metrics.latencies_ms.append((t_us - req.arrival_us) / 1000.0)
            self._record(req, batch.start_us, t_us, Outcome.IN_SLO if in_slo else Outcome.LATE)

    def _record(
        self, req: Request, start_us: int | None, end_us: int | None, outcome: Outcome
    ) -> None:
        if self.scenario.record_requests:
            self.requests.append(
                RequestRecord(
                    req.request_id,
                    req.model,
                    req.arrival_us,
                    req.deadline_us,
                    start_us,
                    end_us,
                    outcome,
                )
            )

    def _next_boundary(self, t_us: int) -> int:
        return -(-t_us // self.slot_us)

    def _dispatch_gslice(self, model: str, t_us: int) -> None:
        """Serve ``model`` on its fixed partition as soon as it is idle."""
        if self.in_flight[model] is not None or not self.queues[model]:
            return
        slot = self._next_boundary(t_us)
        start_us = slot * self.slot_us
        if not self.gpu.available(model, start_us):
            return
        config = self.gpu.config(model)
        pct = self.gslice_pct[model]
        requests = self._take(model, config.batch)
        profile = self.profiles.get(model)
        duration = (
            latency(profile, pct, len(requests)) if profile is not None else config.runtime_ms
        )
        length = ms_to_slots(duration, self.slot_ms)
        if slot + length <= self.gpu.timeline.n_slots:
            self.gpu.timeline.add(slot, length, pct)
        self.scoreboard.record(model)
        batch = _Batch(
            model=model,
            requests=requests,
            start_us=start_us,
            duration_us=ms_to_us(duration),
            gpu_pct=pct,
            busy_pct=pct,
            kind=RunKind.STATIC,
            session=self._session_of(start_us),
        )
        self.in_flight[model] = batch
        self.events.push(start_us, EventKind.RUN_START, batch)

    def _serving_pct(self, model: str) -> float:
        """GPU% the current plan runs ``model`` at (below the knee when reduced)."""
        if self.plan is not None:
            try:
                return self.plan.model(model).knee_pct
            except KeyError:
                pass
        return self.gpu.config(model).knee_pct

    def _fill(self, t_us: int) -> None:
        """Opportunistically start runs for waiting models in idle capacity."""
        slot = self._next_boundary(t_us)
        horizon = self.committed * self.session_slots
        if slot >= horizon:
            return
        ready = [
            name
            for name in self.names
            if self.queues[name]
            and self.in_flight[name] is None
            and name in self.profiles
            and self.gpu.available(name, slot * self.slot_us)
            and not self._static_covers(name, slot)
        ]
        for name in sorted(ready, key=lambda n: (self.scoreboard.count(n), n)):
            pct = self._serving_pct(name)
            limit = min(self._next_static(name, slot), horizon)
            chosen = plan_fill(
                self.gpu.timeline, slot, pct, limit, self.profiles[name], len(self.queues[name])
            )
            if chosen is None:
                continue
            size, duration = chosen
            self.gpu.timeline.add(slot, ms_to_slots(duration, self.slot_ms), pct)
            self.scoreboard.record(name)
            start_us = slot * self.slot_us
            batch = _Batch(
                model=name,
                requests=self._take(name, size),
                start_us=start_us,
                duration_us=ms_to_us(duration),
                gpu_pct=pct,
                busy_pct=pct,
                kind=RunKind.FILL,
                session=self._session_of(start_us),
            )
            self.in_flight[name] = batch
            self.events.push(start_us, EventKind.RUN_START, batch)
            self.log.debug("Fill '%s' b=%d at %.1f ms", name, size, start_us / 1000.0)

    # =========================================================================
    # Reconfiguration
    # =========================================================================

    def _on_reconfig(self, event: ReconfigEvent, t_us: int) -> None:
        try:
            pending = apply_reconfiguration(
                self.gpu, event, t_us, self.profiles.get(event.model), self.config.simulator
            )
        except ReconfigurationError as e:
            self.rejected += 1
            self.log.warning("Rejected reconfiguration of '%s': %s", event.model, e.message)
            return
        if pending is not None:
            self.events.push(pending.done_us, EventKind.RECONFIG_DONE, event.model)

    def _on_reconfig_done(self, model: str) -> None:
        config = complete_reconfiguration(self.gpu, model)
        models = [self.gpu.config(name) for name in self.names]
        self.plan = self._build_plan(models)
        self.gslice_pct = static_spatial(models)
        self.log.info(
            "'%s' now at %.1f%% (%.3f ms); sessions from %d use the new plan",
            model,
            config.knee_pct,
            config.runtime_ms,
            self.committed,
        )

    # =========================================================================
    # Loop
    # =========================================================================

    def _handle(self, event: Event) -> bool:
        """Process one event; True when it should trigger dynamic fill."""
        t = event.time_us
        kind = event.kind
        if kind is EventKind.ARRIVAL:
            name = event.payload
            config = self.gpu.config(name)
            req = Request(self.next_id, name, t, t + ms_to_us(config.slo_ms))
            self.next_id += 1
            self.queues[name].append(req)
            self.metrics[name].arrived += 1
            session = self.sessions[self._session_of(t)]
            session.arrived[name] = session.arrived.get(name, 0) + 1
            if self.workload.scheduler is SchedulerKind.GSLICE:
                self._dispatch_gslice(name, t)
            return self.workload.scheduler is SchedulerKind.DSTACK
        if kind is EventKind.RUN_START:
            if isinstance(event.payload, _Planned):
                self._on_static_start(event.payload, t)
            else:
                self._start(event.payload)
            return False
        if kind is EventKind.RUN_END:
            batch = event.payload
            self._on_run_end(batch, t)
            if self.workload.scheduler is SchedulerKind.GSLICE:
                self._dispatch_gslice(batch.model, t)
            return True
        if kind is EventKind.SESSION_START:
            session = event.payload
            self.scoreboard.start_session()
            self._commit(session + _LOOKAHEAD)
            self._generate_arrivals(session)
            return True
        if kind is EventKind.RECONFIG:
            self._on_reconfig(event.payload, t)
            return False
        if kind is EventKind.RECONFIG_DONE:
            self._on_reconfig_done(event.payload)
            return False
        raise AssertionError(f"Unhandled event kind {kind!r}")

    def _finish(self) -> None:
        """Classify requests still waiting or running at the end."""
        for name in self.names:
            waiting: list[tuple[Request, int | None]] = []
            batch = self.in_flight[name]
            if batch is not None:
                waiting.extend((req, batch.start_us) for req in batch.requests)
            waiting.extend((req, None) for req in self.queues[name])
            for req, start in waiting:
                if req.deadline_us <= self.end_us:
                    self.metrics[name].unserved += 1
                    self._record(req, start, None, Outcome.UNSERVED)
                else:
                    self.metrics[name].residual += 1
                    self._record(req, start, None, Outcome.RESIDUAL)

    def run(self) -> SimMetrics:
        self.log.info(
            "Simulating %d model(s) with %s for %.1f s",
            len(self.names),
            self.workload.scheduler.value,
            self.scenario.duration_s,
        )
        for k in range(self.n_sessions):
            self.events.push(k * self.session_us, EventKind.SESSION_START, k)
        for event in self.workload.reconfigurations:
            if event.model in self.gpu.instances:
                self.events.push(ms_to_us(event.time_ms), EventKind.RECONFIG, event)
        for k in range(_LOOKAHEAD + 1):
            self._commit(k)

        while (head := self.events.peek()) is not None and head.time_us <= self.end_us:
            t = head.time_us
            trigger = False
            while (head := self.events.peek()) is not None and head.time_us == t:
                trigger |= self._handle(self.events.pop())
            if trigger and self.fills:
                self._fill(t)

        self._finish()
        starts = [k * self.session_slots for k in range(self.n_sessions)]
        for session, util in zip(
            self.sessions, session_utilization(self.busy, starts, self.session_slots)
        ):
            session.utilization = util

        result = SimMetrics(
            scenario=self.scenario.name,
            duration_s=self.scenario.duration_s,
            slot_ms=self.slot_ms,
            models=self.metrics,
            gpu_busy=[self.busy],
            sessions=self.sessions,
            runs=self.runs,
            requests=self.requests,
            rejected_reconfigurations=self.rejected,
        )
        self.log.info(
            "Done: %.1f req/s, %d violation(s), %.1f%% utilization",
            result.total_throughput,
            result.violations,
            result.mean_utilization,
        )
        return result


def simulate_gpu(
    scenario: Scenario,
    workload: GpuWorkload,
    profiles: Mapping[str, ModelProfile],
    seed: np.random.SeedSequence,
    config: Config | None = None,
) -> SimMetrics:
    """Run one GPU's share of a scenario."""
    return GpuSimulator(scenario, workload, profiles, seed, config).run()


__all__ = ["GpuWorkload", "Request", "GpuSimulator", "simulate_gpu"]
