"""Analytical model of DNN kernel parallelism on a GPU.

A synthetic DNN is a chain of ``k_max`` kernels. The first kernel exposes
``p * b`` parallel operations and every later kernel exposes a little less,
so the useful number of SMs shrinks as inference progresses. Execution time
is the serialized launch/memory work plus the parallel work spread over
``min(s, N_i)`` SMs.

The knee of a latency curve is the SM count that maximises ``1/(E_t^2 * s)``:
past it, more SMs buy little latency for their cost.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property

import numpy as np
import numpy.typing as npt

from .exceptions import AnalyticModelError, ClassificationError, KernelIndexError

DEFAULT_DEVICE_INDEX = 139.8


class MemMode(str, Enum):
    """How the per-kernel memory wait depends on the SM count."""

    VERBATIM = "verbatim"  # d_i * s / M
    BANDWIDTH = "bandwidth"  # d_i / (M * s)
    OFF = "off"


class Bound(str, Enum):
    """Roofline bound of a kernel."""

    COMPUTE = "Compute"
    MEMORY = "Memory"


@dataclass(frozen=True)
class AnalyticDnn:
    """Parameterised synthetic DNN.

    Attributes:
        k_max: Number of kernels
        p: Parallel operations of the first kernel at batch 1
        t_p: Time per parallel operation
        t_np: Serialized launch time per kernel execution
        repeats: Per-kernel repetition counts (defaults to all ones)
        data_bytes: Per-kernel parameter bytes (defaults to all zeros)
        mem_bw_per_sm: Bytes per time unit per SM, or None to disable the memory term
    """

    k_max: int
    p: int
    t_p: float
    t_np: float = 0.0
    repeats: tuple[int, ...] = field(default=())
    data_bytes: tuple[float, ...] = field(default=())
    mem_bw_per_sm: float | None = None

    def __post_init__(self) -> None:
        if self.k_max < 1:
            raise AnalyticModelError("k_max must be at least 1", details={"k_max": self.k_max})
        if self.p < 1:
            raise AnalyticModelError("p must be at least 1", details={"p": self.p})
        if self.t_p <= 0:
            raise AnalyticModelError("t_p must be positive", details={"t_p": self.t_p})
        if self.t_np < 0:
            raise AnalyticModelError("t_np cannot be negative", details={"t_np": self.t_np})

        # Frozen dataclass: fill defaults through object.__setattr__
        if not self.repeats:
            object.__setattr__(self, "repeats", (1,) * self.k_max)
        if not self.data_bytes:
            object.__setattr__(self, "data_bytes", (0.0,) * self.k_max)

        if len(self.repeats) != self.k_max or len(self.data_bytes) != self.k_max:
            raise AnalyticModelError(
                "repeats and data_bytes must each have k_max entries",
                details={
                    "k_max": self.k_max,
                    "repeats": len(self.repeats),
                    "data_bytes": len(self.data_bytes),
                },
            )
        if any(r < 1 for r in self.repeats):
            raise AnalyticModelError("Every kernel repeat count must be at least 1")
        if any(d < 0 for d in self.data_bytes):
            raise AnalyticModelError("Kernel data sizes cannot be negative")
        if self.mem_bw_per_sm is not None and self.mem_bw_per_sm <= 0:
            raise AnalyticModelError(
                "mem_bw_per_sm must be positive or None",
                details={"mem_bw_per_sm": self.mem_bw_per_sm},
            )

    @cached_property
    def _ops_cache(self) -> dict[int, tuple[int, ...]]:
        return {}

    def ops_vector(self, b: int) -> tuple[int, ...]:
        """Parallel operations N_1..N_kmax for batch ``b``."""
        if b < 1:
            raise AnalyticModelError("Batch size must be at least 1", details={"b": b})
        cached = self._ops_cache.get(b)
        if cached is not None:
            return cached

        step = Fraction(self.p * b, self.k_max)
        ops = [self.p * b]
        for _ in range(1, self.k_max):
            ops.append(max(0, math.floor(ops[-1] - step)))
        result = tuple(ops)
        self._ops_cache[b] = result
        return result


def _check_index(dnn: AnalyticDnn, i: int) -> None:
    if not 1 <= i <= dnn.k_max:
        raise KernelIndexError(
            f"Kernel index {i} outside 1..{dnn.k_max}", index=i, k_max=dnn.k_max
        )


def parallel_ops(dnn: AnalyticDnn, i: int, b: int) -> int:
    """Parallelisable operations N_i of kernel ``i`` (1-based) at batch ``b``.

    N_1 = p*b and N_i = floor(N_{i-1} - p*b/k_max), clamped at zero.
    """
    _check_index(dnn, i)
    return dnn.ops_vector(b)[i - 1]


def kernel_exec_time(dnn: AnalyticDnn, i: int, s: int, b: int) -> float:
    """Time of kernel ``i`` when its N_i*t_p work is spread over ``min(s, N_i)`` SMs."""
    if s < 1:
        raise AnalyticModelError("SM count must be at least 1", details={"s": s})
    n = parallel_ops(dnn, i, b)
    return n * dnn.t_p / max(1, min(s, n))


def memory_wait(
    dnn: AnalyticDnn,
    i: int,
    s: int,
    mode: MemMode | str = MemMode.VERBATIM,
) -> float:
    """Time kernel ``i`` waits for its parameters on ``s`` SMs."""
    _check_index(dnn, i)
    mode = MemMode(mode)
    if mode is MemMode.OFF or dnn.mem_bw_per_sm is None:
        return 0.0
    d = dnn.data_bytes[i - 1]
    if mode is MemMode.VERBATIM:
        return d * s / dnn.mem_bw_per_sm
    return d / (dnn.mem_bw_per_sm * s)


def serialized_time(
    dnn: AnalyticDnn,
    s: int,
    b: int,
    mode: MemMode | str = MemMode.VERBATIM,
) -> float:
    """Non-parallelisable time b * sum_i R_i * (t_np + E_m(i, s))."""
    total = 0.0
    for i in range(1, dnn.k_max + 1):
        total += dnn.repeats[i - 1] * (dnn.t_np + memory_wait(dnn, i, s, mode))
    return b * total


def total_exec_time(
    dnn: AnalyticDnn,
    s: int,
    b: int,
    mode: MemMode | str = MemMode.VERBATIM,
) -> float:
    """Inference time E_t = W_se + sum_i R_i * E_i on ``s`` SMs."""
    if s < 1 or b < 1:
        raise AnalyticModelError("SM count and batch must be at least 1", details={"s": s, "b": b})
    parallel = sum(
        dnn.repeats[i - 1] * kernel_exec_time(dnn, i, s, b) for i in range(1, dnn.k_max + 1)
    )
    return serialized_time(dnn, s, b, mode) + parallel


def latency_curve(
    dnn: AnalyticDnn,
    s_max: int,
    b: int = 1,
    mode: MemMode | str = MemMode.VERBATIM,
) -> npt.NDArray[np.float64]:
    """E_t(s) for s = 1..s_max."""
    if s_max < 1:
        raise AnalyticModelError("s_max must be at least 1", details={"s_max": s_max})
    return np.array([total_exec_time(dnn, s, b, mode) for s in range(1, s_max + 1)])


def knee_metric(latencies: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """1/(E_t(s)^2 * s) for a curve indexed from s = 1."""
    curve = np.asarray(latencies, dtype=np.float64)
    if curve.size == 0:
        raise AnalyticModelError("Latency curve is empty")
    if np.any(curve <= 0):
        raise AnalyticModelError("Latencies must all be positive")
    s = np.arange(1, curve.size + 1, dtype=np.float64)
    return 1.0 / (curve**2 * s)


def knee_from_curve(latencies: npt.ArrayLike) -> int:
    """SM count (1-based) maximising 1/(E_t^2 * s); ties go to the smaller count."""
    # np.argmax returns the first maximum
    return int(np.argmax(knee_metric(latencies))) + 1


@dataclass(frozen=True)
class KernelClassification:
    """Roofline classification of a single kernel."""

    flops: float
    bytes: float
    intensity: float
    bound: Bound


def classify_kernel(
    flops: float,
    bytes_: float,
    device_index: float = DEFAULT_DEVICE_INDEX,
) -> KernelClassification:
    """Classify a kernel as compute- or memory-bound by arithmetic intensity.

    Compute-bound only when flops/bytes is strictly above ``device_index``.
    """
    if bytes_ <= 0:
        raise ClassificationError(
            "Arithmetic intensity needs a positive byte count", details={"bytes": bytes_}
        )
    intensity = flops / bytes_
    bound = Bound.COMPUTE if intensity > device_index else Bound.MEMORY
    return KernelClassification(flops=flops, bytes=bytes_, intensity=intensity, bound=bound)


__all__ = [
    "DEFAULT_DEVICE_INDEX",
    "MemMode",
    "Bound",
    "AnalyticDnn",
    "KernelClassification",
    "parallel_ops",
    "kernel_exec_time",
    "memory_wait",
    "serialized_time",
    "total_exec_time",
    "latency_curve",
    "knee_metric",
    "knee_from_curve",
    "classify_kernel",
]
