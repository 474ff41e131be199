"""Tests for GPU% reconfiguration of resident instances."""

import pytest

from dstack_sim.catalog import catalog_model, catalog_profile
from dstack_sim.config import SimulatorConfig
from dstack_sim.exceptions import ReconfigurationError
from dstack_sim.profiles import ModelConfig
from dstack_sim.simulator import (
    GpuState,
    ReconfigEvent,
    ReconfigMode,
    apply_reconfiguration,
    complete_reconfiguration,
)


@pytest.fixture
def gpu() -> GpuState:
    return GpuState.create(0, [catalog_model("Alexnet"), catalog_model("VGG-19")], 100, 0.1)


def _event(pct: float, mode: ReconfigMode = ReconfigMode.OVERLAP) -> ReconfigEvent:
    return ReconfigEvent(time_ms=0, model="Alexnet", gpu_pct=pct, mode=mode)


class TestGpuState:
    def test_create(self, gpu: GpuState) -> None:
        assert gpu.timeline.n_slots == 1000
        assert gpu.resident_pct() == 80
        assert gpu.within_capacity()

    def test_over_capacity_detected(self, gpu: GpuState) -> None:
        gpu.timeline.add(0, 10, 110.0)
        assert not gpu.within_capacity()


class TestApplyReconfiguration:
    def test_overlap_mode(self, gpu: GpuState) -> None:
        pending = apply_reconfiguration(gpu, _event(40), 0, catalog_profile("Alexnet"))
        assert pending is not None
        assert pending.done_us == 4_000_100
        assert pending.new_config.knee_pct == 40
        assert pending.new_config.runtime_ms == pytest.approx(7.0)
        # Old instance serves during the load
        assert gpu.available("Alexnet", 1_000_000)
        assert not gpu.available("Alexnet", 4_000_050)
        assert gpu.available("Alexnet", 4_000_100)

    def test_downtime_mode(self, gpu: GpuState) -> None:
        config = SimulatorConfig(load_time_ms=100.0)
        pending = apply_reconfiguration(
            gpu, _event(40, ReconfigMode.DOWNTIME), 1000, catalog_profile("Alexnet"), config
        )
        assert pending is not None
        assert pending.done_us == 101_000
        assert not gpu.available("Alexnet", 50_000)
        assert gpu.available("Alexnet", 101_000)
        assert gpu.available("VGG-19", 50_000)

    def test_unchanged_pct(self, gpu: GpuState) -> None:
        assert apply_reconfiguration(gpu, _event(30), 0, catalog_profile("Alexnet")) is None

    def test_not_resident(self, gpu: GpuState) -> None:
        event = ReconfigEvent(time_ms=0, model="BERT", gpu_pct=40)
        with pytest.raises(ReconfigurationError, match="not resident"):
            apply_reconfiguration(gpu, event, 0, catalog_profile("BERT"))

    def test_already_in_flight(self, gpu: GpuState) -> None:
        apply_reconfiguration(gpu, _event(40), 0, catalog_profile("Alexnet"))
        with pytest.raises(ReconfigurationError, match="already moving"):
            apply_reconfiguration(gpu, _event(50), 10, catalog_profile("Alexnet"))

    def test_needs_profile(self, gpu: GpuState) -> None:
        with pytest.raises(ReconfigurationError, match="profile"):
            apply_reconfiguration(gpu, _event(40), 0, None)

    def test_runtime_over_slo(self) -> None:
        tight = ModelConfig(name="Alexnet", knee_pct=30, slo_ms=8.5, batch=16, runtime_ms=8)
        gpu = GpuState.create(0, [tight], 100, 0.1)
        with pytest.raises(ReconfigurationError, match="SLO"):
            apply_reconfiguration(gpu, _event(20), 0, catalog_profile("Alexnet"))


class TestCompleteReconfiguration:
    def test_switches_config(self, gpu: GpuState) -> None:
        apply_reconfiguration(gpu, _event(40), 0, catalog_profile("Alexnet"))
        config = complete_reconfiguration(gpu, "Alexnet")
        assert config.knee_pct == 40
        assert gpu.config("Alexnet").knee_pct == 40
        assert gpu.instances["Alexnet"].pending is None

    def test_nothing_pending(self, gpu: GpuState) -> None:
        with pytest.raises(ReconfigurationError):
            complete_reconfiguration(gpu, "Alexnet")
