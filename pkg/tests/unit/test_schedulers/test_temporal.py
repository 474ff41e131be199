"""Tests for the temporal sharing schedule."""

import pytest

from dstack_sim.exceptions import SchedulerError
from dstack_sim.profiles import ModelConfig
from dstack_sim.schedulers import temporal_schedule


class TestTemporalSchedule:
    def test_three_model_utilization(self, three_models: list[ModelConfig]) -> None:
        schedule = temporal_schedule(three_models)
        assert schedule.session_len_ms == 100
        assert schedule.utilization() == pytest.approx(41.1)

    def test_one_run_per_slice(self, three_models: list[ModelConfig]) -> None:
        schedule = temporal_schedule(three_models)
        assert [r.model for r in schedule.runs] == ["Alexnet", "ResNet-50", "VGG-19"]

    def test_runs_reserve_whole_gpu(self, three_models: list[ModelConfig]) -> None:
        schedule = temporal_schedule(three_models)
        assert all(r.gpu_pct == 100 for r in schedule.runs)
        assert schedule.max_occupancy() == 100
        assert [r.utilized_pct for r in schedule.runs] == [30, 40, 50]

    def test_runs_never_overlap(self, four_models: list[ModelConfig]) -> None:
        runs = sorted(temporal_schedule(four_models).runs, key=lambda r: r.start_ms)
        for a, b in zip(runs, runs[1:], strict=False):
            assert a.end_ms <= b.start_ms + 1e-9

    def test_slice_repeats(self) -> None:
        model = ModelConfig(name="A", knee_pct=30, slo_ms=25, batch=8, runtime_ms=5)
        schedule = temporal_schedule([model], session_len_ms=25)
        assert len(schedule.runs) == 5
        assert schedule.utilization() == pytest.approx(30.0)

    def test_requires_models(self) -> None:
        with pytest.raises(SchedulerError):
            temporal_schedule([])
