"""dstack-sim - GPU spatio-temporal scheduling library and simulator.

Models how much of a GPU a DNN inference job can use before latency stops
improving (its knee), picks an operating GPU% and batch under an SLO, builds
temporal, spatial and D-STACK schedules for several models sharing a GPU,
and simulates request arrivals against those schedules.

Pipeline:
    latency profile → knee / optimize → schedule → simulate
                                           ↘ ideal comparison on kernel traces

Example Usage:
    >>> from dstack_sim import catalog_model, dstack_schedule, fill_session
    >>> from dstack_sim import catalog_profiles
    >>>
    >>> models = [catalog_model(n) for n in ("Alexnet", "ResNet-50", "VGG-19")]
    >>> schedule = dstack_schedule(models, catalog_profiles())
    >>> filled = fill_session(schedule, catalog_profiles())
    >>> round(filled.utilization(), 1) >= round(schedule.utilization(), 1)
    True
"""

from .analytic_model import (
    AnalyticDnn,
    Bound,
    KernelClassification,
    MemMode,
    classify_kernel,
    knee_from_curve,
    knee_metric,
    latency_curve,
    total_exec_time,
)
from .batch_optimizer import (
    Constraint,
    Infeasible,
    OperatingPoint,
    OptimizationProblem,
    feasibility_region,
    optimize,
)
from .catalog import builtin_catalog, catalog_model, catalog_profile, catalog_profiles
from .config import (
    AnalyticConfig,
    Config,
    LoggingConfig,
    SchedulerConfig,
    SimulatorConfig,
    get_config,
    set_config,
)
from .exceptions import (
    AdmissionError,
    AnalyticModelError,
    ConfigError,
    ConfigValidationError,
    DStackSimError,
    OptimizerError,
    PlacementError,
    ProfileError,
    ProfileFormatError,
    ProfileValidationError,
    ReconfigurationError,
    ScenarioError,
    SchedulerError,
    SearchGuardExceededError,
    SimulatorError,
)
from .logging import get_logger, get_scenario_logger, setup_logging
from .profiles import (
    ModelConfig,
    ModelProfile,
    knee_from_profile,
    latency,
    load_catalog,
    load_profile,
    load_profiles,
)
from .schedulers import (
    Oversubscribed,
    ScheduledRun,
    SessionSchedule,
    compare_schedulers,
    dstack_schedule,
    fill_session,
    ideal_schedule,
    static_spatial,
    temporal_schedule,
    wmax_min,
)
from .simulator import (
    Scenario,
    SimMetrics,
    load_scenario,
    online_knee_probe,
    place_multi_gpu,
    run,
    variable_rate_session,
)

__version__ = "0.1.0"

__all__ = [
    # Version
    "__version__",
    # Analytic model
    "AnalyticDnn",
    "MemMode",
    "Bound",
    "KernelClassification",
    "total_exec_time",
    "latency_curve",
    "knee_metric",
    "knee_from_curve",
    "classify_kernel",
    # Profiles
    "ModelConfig",
    "ModelProfile",
    "load_profiles",
    "load_profile",
    "load_catalog",
    "latency",
    "knee_from_profile",
    "builtin_catalog",
    "catalog_model",
    "catalog_profile",
    "catalog_profiles",
    # Optimizer
    "Constraint",
    "OptimizationProblem",
    "OperatingPoint",
    "Infeasible",
    "optimize",
    "feasibility_region",
    # Schedulers
    "ScheduledRun",
    "SessionSchedule",
    "Oversubscribed",
    "temporal_schedule",
    "static_spatial",
    "wmax_min",
    "dstack_schedule",
    "fill_session",
    "ideal_schedule",
    "compare_schedulers",
    # Simulator
    "Scenario",
    "SimMetrics",
    "load_scenario",
    "run",
    "place_multi_gpu",
    "variable_rate_session",
    "online_knee_probe",
    # Exceptions
    "DStackSimError",
    "AnalyticModelError",
    "ProfileError",
    "ProfileFormatError",
    "ProfileValidationError",
    "OptimizerError",
    "SchedulerError",
    "AdmissionError",
    "SearchGuardExceededError",
    "SimulatorError",
    "ScenarioError",
    "ReconfigurationError",
    "PlacementError",
    "ConfigError",
    "ConfigValidationError",
    # Configuration
    "Config",
    "SchedulerConfig",
    "SimulatorConfig",
    "AnalyticConfig",
    "LoggingConfig",
    "get_config",
    "set_config",
    # Logging
    "setup_logging",
    "get_logger",
    "get_scenario_logger",
]
