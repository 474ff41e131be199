"""Schedule constructors: temporal, static spatial, max-min, D-STACK and ideal."""

from .dstack import (
    Job,
    admit,
    close_gaps,
    dstack_schedule,
    is_schedulable,
    repeats,
    serving_candidates,
    session_length,
    start_late,
)
from .fill import Scoreboard, dynamic_fill, fill_session, session_backlog
from .ideal import (
    Comparison,
    KernelInstance,
    KernelModel,
    KernelScheduleResult,
    KernelSpec,
    compare_schedulers,
    ideal_schedule,
    load_instance,
)
from .spatial import static_spatial, wmax_min
from .temporal import temporal_schedule
from .timeline import Timeline
from .types import (
    Oversubscribed,
    PlacementStep,
    RunKind,
    ScheduledRun,
    SessionSchedule,
    utilization,
)

__all__ = [
    # Types
    "ScheduledRun",
    "SessionSchedule",
    "PlacementStep",
    "Oversubscribed",
    "RunKind",
    "Timeline",
    "utilization",
    # Constructors
    "temporal_schedule",
    "static_spatial",
    "wmax_min",
    "Job",
    "admit",
    "session_length",
    "repeats",
    "start_late",
    "dstack_schedule",
    "is_schedulable",
    "close_gaps",
    "serving_candidates",
    # Fill
    "Scoreboard",
    "dynamic_fill",
    "session_backlog",
    "fill_session",
    # Kernel level
    "KernelSpec",
    "KernelModel",
    "KernelInstance",
    "KernelScheduleResult",
    "Comparison",
    "load_instance",
    "ideal_schedule",
    "compare_schedulers",
]
