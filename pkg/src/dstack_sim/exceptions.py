"""Exception hierarchy for dstack-sim.

This module defines the exception hierarchy for the package, making error
handling consistent across the analytic model, the schedulers and the
simulator.

All exceptions include:
- A descriptive error message
- Optional details dictionary
- A suggestion property for recommended fixes

Scheduling outcomes that are expected in normal operation (an oversubscribed
GPU, an infeasible optimisation problem) are returned as values, not raised.
"""

from typing import Any


class DStackSimError(Exception):
    """Base exception for all dstack-sim errors.

    All custom exceptions in this package inherit from this class,
    making it easy to catch all package-specific errors.
    """

    # Default suggestion (override in subclasses)
    _suggestion: str | None = None

    def __init__(
        self,
        message: str,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message)
        self.message = message
        self.details = details or {}
        self._custom_suggestion = suggestion

    @property
    def suggestion(self) -> str | None:
        """Get a suggested fix for this error."""
        return self._custom_suggestion or self._suggestion

    def __str__(self) -> str:
        parts = [self.message]
        if self.details:
            parts.append(f"Details: {self.details}")
        if self.suggestion:
            parts.append(f"Suggestion: {self.suggestion}")
        return "\n".join(parts)

    def format_short(self) -> str:
        """Format error message without details."""
        if self.suggestion:
            return f"{self.message}\n  → {self.suggestion}"
        return self.message


# =============================================================================
# Analytic Model Errors
# =============================================================================


class AnalyticModelError(DStackSimError):
    """Raised when an analytic DNN description is invalid."""

    _suggestion = "Check k_max, p, t_p and the per-kernel repeat/data vectors."


class KernelIndexError(AnalyticModelError, IndexError):
    """Raised when a kernel index falls outside 1..k_max."""

    _suggestion = "Kernel indices are 1-based and must not exceed k_max."

    def __init__(
        self,
        message: str,
        index: int | None = None,
        k_max: int | None = None,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message, details, suggestion)
        self.index = index
        self.k_max = k_max


class ClassificationError(AnalyticModelError):
    """Raised when a kernel cannot be classified (for example zero bytes moved)."""

    _suggestion = "Arithmetic intensity needs a positive byte count."


# =============================================================================
# Profile Errors
# =============================================================================


class ProfileError(DStackSimError):
    """Base class for latency profile errors."""

    _suggestion = "Check the profile CSV (columns: model,gpu_pct,batch,latency_ms)."


class ProfileFormatError(ProfileError):
    """Raised when a profile or catalog CSV cannot be parsed."""

    def __init__(
        self,
        message: str,
        line: int | None = None,
        column: str | None = None,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message, details, suggestion)
        self.line = line
        self.column = column

        if column and line is None:
            self._custom_suggestion = f"Add the missing '{column}' column to the header row."
        elif line is not None:
            self._custom_suggestion = f"Fix the row on line {line} of the input."


class ProfileValidationError(ProfileError):
    """Raised when a profile grid violates positivity, completeness or monotonicity."""

    _suggestion = (
        "Latency must be positive and must not increase as GPU% grows for a fixed batch."
    )

    def __init__(
        self,
        message: str,
        cells: list[tuple[float, int]] | None = None,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message, details, suggestion)
        self.cells = cells or []


class BatchOutOfRangeError(ProfileError):
    """Raised when a latency query asks for a batch larger than the profile supports."""

    _suggestion = "Query a batch size no larger than the profile's max_batch."

    def __init__(
        self,
        message: str,
        batch: int | None = None,
        max_batch: int | None = None,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message, details, suggestion)
        self.batch = batch
        self.max_batch = max_batch


class UnknownModelError(ProfileError):
    """Raised when a model name is not in the catalog."""

    def __init__(
        self,
        message: str,
        name: str | None = None,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message, details, suggestion)
        self.name = name
        if name:
            self._custom_suggestion = (
                f"'{name}' is not a catalog model. Run 'dstack-sim catalog' to list them, "
                "or supply a profile CSV."
            )


# =============================================================================
# Optimizer Errors
# =============================================================================


class OptimizerError(DStackSimError):
    """Raised when an optimisation problem is malformed."""

    _suggestion = "The request rate and SLO must both be positive."


# =============================================================================
# Scheduler Errors
# =============================================================================


class SchedulerError(DStackSimError):
    """Base class for schedule construction errors."""

    _suggestion = "Check the model set: knee%, SLO and runtime must be positive."


class AdmissionError(SchedulerError):
    """Raised when a model can never meet its SLO (runtime longer than the SLO)."""

    def __init__(
        self,
        message: str,
        model: str | None = None,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message, details, suggestion)
        self.model = model
        if model:
            self._custom_suggestion = (
                f"Model '{model}' has a runtime above its SLO. Lower its batch size "
                "or raise its GPU% before admitting it."
            )


class SearchGuardExceededError(SchedulerError):
    """Raised when the ideal scheduler's exhaustive search would be too large."""

    _suggestion = "Use a smaller instance: fewer models, a shorter horizon or wider slots."

    def __init__(
        self,
        message: str,
        estimate: int | None = None,
        limit: int | None = None,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message, details, suggestion)
        self.estimate = estimate
        self.limit = limit


# =============================================================================
# Simulator Errors
# =============================================================================


class SimulatorError(DStackSimError):
    """Base class for simulation errors."""

    _suggestion = "Check the scenario file against the documented scenario fields."


class ScenarioError(SimulatorError):
    """Raised when a scenario is invalid or cannot be scheduled."""

    def __init__(
        self,
        message: str,
        path: str | None = None,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message, details, suggestion)
        self.path = path


class ReconfigurationError(SimulatorError):
    """Raised when a GPU% reconfiguration cannot be applied."""

    _suggestion = (
        "Only one reconfiguration per model may be in flight; space events by at least "
        "the standby load time."
    )


class PlacementError(SimulatorError):
    """Raised when models cannot be placed onto the available GPUs."""

    _suggestion = "Add GPUs or use the 'replicate' placement mode."


# =============================================================================
# Configuration Errors
# =============================================================================


class ConfigError(DStackSimError):
    """Base class for configuration errors."""

    _suggestion = "Check your configuration file or DSTACK_* environment variables."


class ConfigValidationError(ConfigError):
    """Raised when configuration validation fails."""

    _suggestion = "The configuration value is invalid. Check the documented ranges."

    def __init__(
        self,
        message: str,
        field: str | None = None,
        value: Any = None,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message, details, suggestion)
        self.field = field
        self.value = value

        # Generate specific suggestion
        if field and value is not None:
            self._custom_suggestion = (
                f"Invalid value for '{field}': {value!r}. "
                f"See the configuration guide for valid values."
            )


class ConfigNotFoundError(ConfigError):
    """Raised when a configuration file is not found."""

    _suggestion = (
        "The configuration file was not found. "
        "Create the file or use --config to specify a different path."
    )

    def __init__(
        self,
        message: str,
        path: str | None = None,
        details: dict[str, Any] | None = None,
        suggestion: str | None = None,
    ) -> None:
        super().__init__(message, details, suggestion)
        self.path = path

        if path:
            self._custom_suggestion = (
                f"Configuration file not found: {path}\n"
                f"Create the file or run without --config to use defaults."
            )


__all__ = [
    # Base
    "DStackSimError",
    # Analytic
    "AnalyticModelError",
    "KernelIndexError",
    "ClassificationError",
    # Profiles
    "ProfileError",
    "ProfileFormatError",
    "ProfileValidationError",
    "BatchOutOfRangeError",
    "UnknownModelError",
    # Optimizer
    "OptimizerError",
    # Schedulers
    "SchedulerError",
    "AdmissionError",
    "SearchGuardExceededError",
    # Simulator
    "SimulatorError",
    "ScenarioError",
    "ReconfigurationError",
    "PlacementError",
    # Config
    "ConfigError",
    "ConfigValidationError",
    "ConfigNotFoundError",
]
