"""Discrete-event simulation of GPU inference serving."""

from .cluster import Placement, place_multi_gpu, run, workloads
from .engine import GpuSimulator, GpuWorkload, simulate_gpu
from .events import Event, EventKind, EventQueue
from .gpu import GpuState, Instance, apply_reconfiguration, complete_reconfiguration
from .knee_probe import KneeProbeResult, knee_probe_reconfigurations, online_knee_probe
from .metrics import (
    ExecutedRun,
    ModelMetrics,
    Outcome,
    RequestRecord,
    SessionMetrics,
    SimMetrics,
    merge_metrics,
)
from .scenario import (
    ArrivalProcess,
    PlacementMode,
    ReconfigEvent,
    ReconfigMode,
    Scenario,
    ScenarioModel,
    SchedulerKind,
    load_scenario,
    shipped_scenarios,
)
from .variable_rate import VariableRateReport, constant_rate, variable_rate_session

__all__ = [
    # Scenario
    "ArrivalProcess",
    "SchedulerKind",
    "ReconfigMode",
    "PlacementMode",
    "ScenarioModel",
    "ReconfigEvent",
    "Scenario",
    "load_scenario",
    "shipped_scenarios",
    # Engine
    "Event",
    "EventKind",
    "EventQueue",
    "GpuState",
    "Instance",
    "apply_reconfiguration",
    "complete_reconfiguration",
    "GpuWorkload",
    "GpuSimulator",
    "simulate_gpu",
    "run",
    # Results
    "Outcome",
    "RequestRecord",
    "ExecutedRun",
    "ModelMetrics",
    "SessionMetrics",
    "SimMetrics",
    "merge_metrics",
    # Multi-GPU and sessions
    "Placement",
    "place_multi_gpu",
    "workloads",
    "variable_rate_session",
    "constant_rate",
    "VariableRateReport",
    # Knee discovery
    "online_knee_probe",
    "knee_probe_reconfigurations",
    "KneeProbeResult",
]
