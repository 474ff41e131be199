"""Unit tests for the analytic DNN model."""

import numpy as np
import pytest

from dstack_sim.analytic_model import (
    AnalyticDnn,
    Bound,
    MemMode,
    classify_kernel,
    kernel_exec_time,
    knee_from_curve,
    knee_metric,
    latency_curve,
    memory_wait,
    parallel_ops,
    serialized_time,
    total_exec_time,
)
from dstack_sim.exceptions import AnalyticModelError, ClassificationError, KernelIndexError


@pytest.fixture
def dnn() -> AnalyticDnn:
    return AnalyticDnn(k_max=50, p=20, t_p=40.0, t_np=10.0)


class TestAnalyticDnn:
    """Tests for construction and validation."""

    def test_defaults_fill_vectors(self, dnn: AnalyticDnn) -> None:
        """Repeats default to ones and data sizes to zeros."""
        assert dnn.repeats == (1,) * 50
        assert dnn.data_bytes == (0.0,) * 50

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"k_max": 0, "p": 1, "t_p": 1.0},
            {"k_max": 5, "p": 0, "t_p": 1.0},
            {"k_max": 5, "p": 1, "t_p": 0.0},
            {"k_max": 5, "p": 1, "t_p": 1.0, "t_np": -1.0},
            {"k_max": 2, "p": 1, "t_p": 1.0, "repeats": (1,)},
            {"k_max": 2, "p": 1, "t_p": 1.0, "repeats": (1, 0)},
            {"k_max": 2, "p": 1, "t_p": 1.0, "data_bytes": (1.0, -1.0)},
            {"k_max": 2, "p": 1, "t_p": 1.0, "mem_bw_per_sm": 0.0},
        ],
    )
    def test_invalid_parameters(self, kwargs: dict[str, object]) -> None:
        """Malformed descriptions raise AnalyticModelError."""
        with pytest.raises(AnalyticModelError):
            AnalyticDnn(**kwargs)  # type: ignore[arg-type]


class TestParallelOps:
    """Tests for the per-kernel parallelism recursion."""

    def test_first_kernel_scales_with_batch(self, dnn: AnalyticDnn) -> None:
        assert parallel_ops(dnn, 1, 1) == 20
        assert parallel_ops(dnn, 1, 4) == 80

    def test_decreases_then_clamps_at_zero(self, dnn: AnalyticDnn) -> None:
        ops = dnn.ops_vector(1)
        assert ops[:3] == (20, 19, 18)
        assert ops[20] == 0
        assert ops[-1] == 0
        assert all(a >= b for a, b in zip(ops, ops[1:], strict=False))

    @pytest.mark.parametrize("index", [0, 51])
    def test_index_out_of_range(self, dnn: AnalyticDnn, index: int) -> None:
        with pytest.raises(KernelIndexError) as exc_info:
            parallel_ops(dnn, index, 1)
        assert isinstance(exc_info.value, IndexError)

    def test_batch_below_one(self, dnn: AnalyticDnn) -> None:
        with pytest.raises(AnalyticModelError):
            dnn.ops_vector(0)


class TestExecutionTime:
    """Tests for kernel, serialized and total time."""

    def test_kernel_time_spreads_over_sms(self, dnn: AnalyticDnn) -> None:
        assert kernel_exec_time(dnn, 1, 5, 1) == pytest.approx(160.0)
        # More SMs than operations: capped at N_i
        assert kernel_exec_time(dnn, 1, 30, 1) == pytest.approx(40.0)

    def test_empty_kernel_takes_no_time(self, dnn: AnalyticDnn) -> None:
        assert kernel_exec_time(dnn, 50, 8, 1) == 0.0

    def test_serialized_time_without_memory(self, dnn: AnalyticDnn) -> None:
        assert serialized_time(dnn, 10, 1, MemMode.OFF) == pytest.approx(500.0)
        assert serialized_time(dnn, 10, 2, MemMode.OFF) == pytest.approx(1000.0)

    def test_memory_wait_modes(self) -> None:
        dnn = AnalyticDnn(k_max=1, p=4, t_p=1.0, data_bytes=(100.0,), mem_bw_per_sm=10.0)
        assert memory_wait(dnn, 1, 2, MemMode.VERBATIM) == pytest.approx(20.0)
        assert memory_wait(dnn, 1, 2, MemMode.BANDWIDTH) == pytest.approx(5.0)
        assert memory_wait(dnn, 1, 2, MemMode.OFF) == 0.0
        assert memory_wait(dnn, 1, 2, "bandwidth") == pytest.approx(5.0)

    def test_memory_wait_disabled_without_bandwidth(self) -> None:
        dnn = AnalyticDnn(k_max=1, p=4, t_p=1.0, data_bytes=(100.0,))
        assert memory_wait(dnn, 1, 2, MemMode.VERBATIM) == 0.0

    def test_total_time_is_sum_of_parts(self, dnn: AnalyticDnn) -> None:
        s = 7
        parallel = sum(kernel_exec_time(dnn, i, s, 1) for i in range(1, 51))
        expected = serialized_time(dnn, s, 1, MemMode.OFF) + parallel
        assert total_exec_time(dnn, s, 1, MemMode.OFF) == pytest.approx(expected)

    def test_repeats_multiply_kernel_time(self) -> None:
        once = AnalyticDnn(k_max=2, p=4, t_p=1.0)
        twice = AnalyticDnn(k_max=2, p=4, t_p=1.0, repeats=(2, 2))
        assert total_exec_time(twice, 2, 1) == pytest.approx(2 * total_exec_time(once, 2, 1))

    def test_total_time_rejects_zero_sms(self, dnn: AnalyticDnn) -> None:
        with pytest.raises(AnalyticModelError):
            total_exec_time(dnn, 0, 1)


class TestKnee:
    """Tests for knee extraction."""

    def test_curve_is_non_increasing(self, dnn: AnalyticDnn) -> None:
        curve = latency_curve(dnn, 80, 1, MemMode.OFF)
        assert curve.shape == (80,)
        assert np.all(np.diff(curve) <= 1e-9)

    def test_curve_rejects_empty_range(self, dnn: AnalyticDnn) -> None:
        with pytest.raises(AnalyticModelError):
            latency_curve(dnn, 0)

    @pytest.mark.parametrize(("n1", "knee"), [(20, 9), (40, 20), (60, 28)])
    def test_knee_moves_right_with_parallelism(self, n1: int, knee: int) -> None:
        dnn = AnalyticDnn(k_max=50, p=n1, t_p=40.0, t_np=10.0)
        assert knee_from_curve(latency_curve(dnn, 80, 1, MemMode.OFF)) == knee

    def test_metric_values(self) -> None:
        metric = knee_metric([4.0, 2.0, 1.5])
        assert metric == pytest.approx([1 / 16, 1 / 8, 1 / (2.25 * 3)])
        assert knee_from_curve([4.0, 2.0, 1.5]) == 3

    def test_flat_curve_knee_is_one(self) -> None:
        assert knee_from_curve([5.0, 5.0, 5.0]) == 1

    @pytest.mark.parametrize("curve", [[], [1.0, 0.0]])
    def test_metric_rejects_bad_curves(self, curve: list[float]) -> None:
        with pytest.raises(AnalyticModelError):
            knee_metric(curve)


class TestClassifyKernel:
    """Tests for roofline classification."""

    def test_compute_bound(self) -> None:
        result = classify_kernel(1000.0, 1.0)
        assert result.bound is Bound.COMPUTE
        assert result.intensity == 1000.0

    def test_boundary_is_memory_bound(self) -> None:
        assert classify_kernel(139.8, 1.0).bound is Bound.MEMORY

    def test_custom_device_index(self) -> None:
        assert classify_kernel(50.0, 1.0, device_index=10.0).bound is Bound.COMPUTE

    def test_zero_bytes(self) -> None:
        with pytest.raises(ClassificationError):
            classify_kernel(1.0, 0.0)
