"""Tests for the single-GPU event loop."""

import pytest

from dstack_sim.config import Config, SimulatorConfig
from dstack_sim.exceptions import ScenarioError
from dstack_sim.schedulers import RunKind
from dstack_sim.simulator import (
    ArrivalProcess,
    ReconfigEvent,
    ReconfigMode,
    Scenario,
    ScenarioModel,
    SchedulerKind,
    load_scenario,
    run,
)


def _single(**overrides: object) -> Scenario:
    """One model, one 5 ms run per 10 ms session, a request every 2.5 ms."""
    fields: dict[str, object] = {
        "name": "single",
        "models": [
            ScenarioModel(
                name="A", rate=400, knee_pct=50, slo_ms=10, batch=4, runtime_ms=5
            )
        ],
        "duration_s": 0.1,
        "arrival": ArrivalProcess.DETERMINISTIC,
        "fill": False,
        "seed": 0,
    }
    fields.update(overrides)
    return Scenario(**fields)  # type: ignore[arg-type]


class TestDeterministicRun:
    def test_request_accounting(self) -> None:
        metrics = run(_single(), Config())
        m = metrics.models["A"]
        assert m.arrived == 39
        assert m.runs == 9
        assert (m.in_slo, m.late, m.unserved, m.residual) == (18, 17, 1, 3)
        assert metrics.conserved()

    def test_static_runs_start_on_session_boundaries(self) -> None:
        metrics = run(_single(), Config())
        assert [r.start_us for r in metrics.runs] == [10_000 * k for k in range(1, 10)]
        assert all(r.kind is RunKind.STATIC for r in metrics.runs)
        assert all(r.batch <= 4 for r in metrics.runs)

    def test_sessions(self) -> None:
        metrics = run(_single(), Config())
        assert len(metrics.sessions) == 10
        assert metrics.sessions[0].arrived == {"A": 3}
        assert sum(s.total_completed for s in metrics.sessions) == 35

    def test_request_trace(self) -> None:
        metrics = run(_single(record_requests=True), Config())
        assert len(metrics.requests) == 39
        unserved = [r for r in metrics.requests if r.end_us is None]
        assert len(unserved) == 4
        assert all(r.latency_ms is None for r in unserved)

    def test_no_trace_by_default(self) -> None:
        assert run(_single(), Config()).requests == []


class TestDeterminism:
    def test_same_seed_same_result(self) -> None:
        scenario = load_scenario("c2_dstack").model_copy(update={"duration_s": 0.5})
        first = run(scenario, Config())
        second = run(scenario, Config())
        assert first.metrics_table().rows == second.metrics_table().rows
        assert first.runs == second.runs

    def test_seed_changes_arrivals(self) -> None:
        scenario = load_scenario("c2_dstack").model_copy(update={"duration_s": 0.5})
        a = run(scenario.with_seed(1), Config())
        b = run(scenario.with_seed(2), Config())
        assert a.metrics_table().rows != b.metrics_table().rows

    def test_missing_seed_defaults_to_zero(self) -> None:
        scenario = _single(arrival=ArrivalProcess.UNIFORM, seed=None)
        unseeded = run(scenario, Config())
        seeded = run(scenario.with_seed(0), Config())
        assert unseeded.runs == seeded.runs


class TestSchedulers:
    def test_dstack_beats_temporal(self) -> None:
        dstack = run(load_scenario("c4_dstack").model_copy(update={"duration_s": 1}), Config())
        temporal = run(
            load_scenario("c4_temporal").model_copy(update={"duration_s": 1}), Config()
        )
        assert dstack.total_throughput >= 3 * temporal.total_throughput
        assert dstack.violations < temporal.violations
        assert dstack.conserved()
        assert temporal.conserved()

    def test_fill_adds_runs(self) -> None:
        scenario = load_scenario("c4_dstack").model_copy(update={"duration_s": 0.5})
        filled = run(scenario, Config())
        static = run(scenario.model_copy(update={"fill": False}), Config())
        assert any(r.kind is RunKind.FILL for r in filled.runs)
        assert not any(r.kind is RunKind.FILL for r in static.runs)
        assert filled.total_throughput >= static.total_throughput

    def test_gslice_uses_fixed_partitions(self) -> None:
        scenario = Scenario(
            models=[
                ScenarioModel(name="Alexnet", rate=500),
                ScenarioModel(name="ResNet-50", rate=200),
            ],
            duration_s=0.3,
            scheduler=SchedulerKind.GSLICE,
            seed=3,
        )
        metrics = run(scenario, Config())
        assert {r.gpu_pct for r in metrics.runs} <= {30.0, 40.0}
        assert metrics.conserved()

    def test_one_run_in_flight_per_model(self) -> None:
        scenario = load_scenario("c4_dstack").model_copy(update={"duration_s": 0.5})
        metrics = run(scenario, Config())
        for name in metrics.models:
            runs = sorted((r for r in metrics.runs if r.model == name), key=lambda r: r.start_us)
            for a, b in zip(runs, runs[1:], strict=False):
                assert a.end_us <= b.start_us

    def test_unschedulable_models(self) -> None:
        scenario = Scenario(
            models=[
                ScenarioModel(name="A", rate=10, knee_pct=60, slo_ms=10, batch=1, runtime_ms=6),
                ScenarioModel(name="B", rate=10, knee_pct=60, slo_ms=10, batch=1, runtime_ms=6),
            ],
            duration_s=0.1,
        )
        with pytest.raises(ScenarioError, match="cannot be scheduled"):
            run(scenario, Config())


class TestReconfiguration:
    def test_downtime_skips_static_run(self) -> None:
        scenario = Scenario(
            models=[ScenarioModel(name="Alexnet", rate=700)],
            duration_s=0.1,
            arrival=ArrivalProcess.DETERMINISTIC,
            fill=False,
            reconfigurations=[
                ReconfigEvent(time_ms=0, model="Alexnet", gpu_pct=40, mode=ReconfigMode.DOWNTIME)
            ],
            seed=0,
        )
        config = Config(simulator=SimulatorConfig(load_time_ms=20.0))
        metrics = run(scenario, config)
        assert metrics.models["Alexnet"].skipped_runs == 1
        assert any(r.gpu_pct == 40 for r in metrics.runs)
        assert metrics.rejected_reconfigurations == 0
        assert metrics.conserved()

    def test_rejected_reconfiguration_is_counted(self) -> None:
        scenario = Scenario(
            models=[ScenarioModel(name="VGG-19", rate=100)],
            duration_s=0.2,
            reconfigurations=[ReconfigEvent(time_ms=10, model="VGG-19", gpu_pct=10)],
            seed=0,
        )
        metrics = run(scenario, Config())
        assert metrics.rejected_reconfigurations == 1
        assert all(r.gpu_pct == 50 for r in metrics.runs)


class TestArrivalFill:
    def _alexnet(self, **overrides: object) -> Scenario:
        fields: dict[str, object] = {
            "name": "arrival-fill",
            "models": [ScenarioModel(name="Alexnet", rate=100)],
            "duration_s": 0.05,
            "arrival": ArrivalProcess.DETERMINISTIC,
            "seed": 0,
        }
        fields.update(overrides)
        return Scenario(**fields)  # type: ignore[arg-type]

    def test_arrival_on_idle_gpu_starts_fill_run(self) -> None:
        # The session-0 static run finds an empty queue; the first request lands at 10 ms
        metrics = run(self._alexnet(), Config())
        first = min(metrics.runs, key=lambda r: r.start_us)
        assert first.start_us == 10_000
        assert first.kind is RunKind.FILL
        assert first.batch == 1
        assert metrics.violations == 0

    def test_temporal_never_fills(self) -> None:
        metrics = run(self._alexnet(scheduler=SchedulerKind.TEMPORAL), Config())
        assert metrics.runs
        assert all(r.kind is RunKind.STATIC for r in metrics.runs)


class TestShortStaticBatch:
    def test_static_run_ends_at_profile_latency(self) -> None:
        # One request per session: the 8 ms Alexnet run finishes in 1.25 ms
        scenario = Scenario(
            name="short-batch",
            models=[ScenarioModel(name="Alexnet", rate=40)],
            duration_s=0.1,
            arrival=ArrivalProcess.DETERMINISTIC,
            fill=False,
            seed=0,
        )
        metrics = run(scenario, Config())
        assert metrics.runs
        for r in metrics.runs:
            assert r.batch == 1
            assert r.end_us - r.start_us == 1250


@pytest.mark.slow
class TestShippedScenarios:
    @pytest.mark.parametrize("name", ["c2_dstack", "c3_dstack", "c4_dstack"])
    def test_no_violations(self, name: str) -> None:
        metrics = run(load_scenario(name), Config())
        assert metrics.violations == 0
        assert metrics.conserved()

    def test_seven_models_served_with_few_misses(self) -> None:
        metrics = run(load_scenario("c7_dstack"), Config())
        assert metrics.conserved()
        assert metrics.miss_fraction <= 0.15
        assert all(m.in_slo > 0 for m in metrics.models.values())

        heavy = {"ResNet-50", "ResNeXt-50", "VGG-19", "Inception"}

        def share(names: set[str]) -> float:
            chosen = [m for name, m in metrics.models.items() if name in names]
            return sum(m.violations for m in chosen) / sum(m.arrived for m in chosen)

        assert share(heavy) > share(set(metrics.models) - heavy)
