"""Performance benchmarks for the scheduling hot paths.

Run with: pytest tests/benchmarks/ --benchmark-only
"""

import pytest

from dstack_sim.analytic_model import AnalyticDnn, MemMode, knee_from_curve, latency_curve
from dstack_sim.batch_optimizer import OperatingPoint, OptimizationProblem, optimize
from dstack_sim.catalog import catalog_profile
from dstack_sim.config import Config
from dstack_sim.profiles import ModelConfig, ModelProfile
from dstack_sim.schedulers import (
    SessionSchedule,
    compare_schedulers,
    dstack_schedule,
    fill_session,
    load_instance,
)
from dstack_sim.simulator import load_scenario, run

# =============================================================================
# Analytic Model Benchmarks
# =============================================================================


class TestAnalyticPerformance:
    def test_knee_of_large_dnn(self, benchmark) -> None:
        dnn = AnalyticDnn(k_max=200, p=60, t_p=40, t_np=10)

        def knee() -> int:
            return knee_from_curve(latency_curve(dnn, 80, 4, MemMode.OFF))

        assert 1 <= benchmark(knee) <= 80


# =============================================================================
# Optimizer Benchmarks
# =============================================================================


class TestOptimizerPerformance:
    def test_grid_scan(self, benchmark) -> None:
        problem = OptimizationProblem(catalog_profile("Mobilenet"), slo_ms=50, request_rate=2079)
        result = benchmark(optimize, problem)
        assert isinstance(result, OperatingPoint)


# =============================================================================
# Scheduler Benchmarks
# =============================================================================


class TestSchedulerPerformance:
    def test_dstack_four_models(
        self,
        benchmark,
        four_models: list[ModelConfig],
        profiles: dict[str, ModelProfile],
    ) -> None:
        result = benchmark(dstack_schedule, four_models, profiles)
        assert isinstance(result, SessionSchedule)

    def test_fill_four_models(
        self,
        benchmark,
        four_models: list[ModelConfig],
        profiles: dict[str, ModelProfile],
    ) -> None:
        schedule = dstack_schedule(four_models, profiles)
        assert isinstance(schedule, SessionSchedule)
        filled = benchmark(fill_session, schedule, profiles)
        assert filled.max_occupancy() <= 100 + 1e-9

    def test_ideal_comparison(self, benchmark) -> None:
        instance = load_instance("convnet_trio")
        comparison = benchmark.pedantic(
            compare_schedulers, args=(instance,), kwargs={"horizon_ms": 20.0}, rounds=3
        )
        assert comparison.dstack_ideal_ratio > 0


# =============================================================================
# Simulator Benchmarks
# =============================================================================


@pytest.mark.slow
class TestSimulatorPerformance:
    def test_one_second_of_c4(self, benchmark) -> None:
        scenario = load_scenario("c4_dstack").model_copy(update={"duration_s": 1.0})
        metrics = benchmark.pedantic(run, args=(scenario, Config()), rounds=3)
        assert metrics.conserved()
