"""Configuration management for dstack-sim.

This module provides type-safe configuration loading from environment
variables and configuration files with validation.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .exceptions import ConfigNotFoundError, ConfigValidationError

MEM_MODES = ("verbatim", "bandwidth", "off")


@dataclass
class SchedulerConfig:
    """Configuration shared by the schedule constructors.

    Attributes:
        slot_us: Occupancy slot width in microseconds
        margin_pct: Knee over-provisioning added to optimizer output (GPU points)
        scoreboard_window: Number of sessions the fairness scoreboard remembers
        reduced_gpu_steps: Knee scale factors tried when a D-STACK schedule oversubscribes
    """

    slot_us: int = 100
    margin_pct: float = 5.0
    scoreboard_window: int = 10
    reduced_gpu_steps: tuple[float, ...] = (0.9, 0.8, 0.7, 0.6, 0.5)

    @property
    def slot_ms(self) -> float:
        """Slot width in milliseconds."""
        return self.slot_us / 1000.0

    def validate(self) -> None:
        """Validate the configuration."""
        if self.slot_us <= 0:
            raise ConfigValidationError(
                "Slot width must be positive", field="slot_us", value=self.slot_us
            )
        if not 0.0 <= self.margin_pct <= 50.0:
            raise ConfigValidationError(
                "Margin must be between 0 and 50 GPU points",
                field="margin_pct",
                value=self.margin_pct,
            )
        if self.scoreboard_window < 1:
            raise ConfigValidationError(
                "Scoreboard window must hold at least one session",
                field="scoreboard_window",
                value=self.scoreboard_window,
            )
        for step in self.reduced_gpu_steps:
            if not 0.0 < step < 1.0:
                raise ConfigValidationError(
                    "Reduced GPU% steps must lie strictly between 0 and 1",
                    field="reduced_gpu_steps",
                    value=step,
                )

    def to_dict(self) -> dict[str, Any]:
        """Convert to dict."""
        return {
            "slot_us": self.slot_us,
            "margin_pct": self.margin_pct,
            "scoreboard_window": self.scoreboard_window,
            "reduced_gpu_steps": list(self.reduced_gpu_steps),
        }


@dataclass
class SimulatorConfig:
    """Configuration for the discrete-event simulator.

    Attributes:
        load_time_ms: Standby instance load time for a GPU% reconfiguration
        switchover_ms: Gap between retiring the active instance and serving from the standby
        jitter_low: Lower bound of the inter-arrival multiplier
        jitter_high: Upper bound of the inter-arrival multiplier
        ideal_guard: Largest exhaustive-search size the ideal scheduler accepts
        horizon_ms: Horizon of the kernel-level scheduler comparison
        calibration_ms: Dry run per candidate D-STACK serving plan (0 disables)
    """

    load_time_ms: float = 4000.0
    switchover_ms: float = 0.1
    jitter_low: float = 0.5
    jitter_high: float = 1.5
    ideal_guard: int = 10**6
    horizon_ms: float = 100.0
    calibration_ms: float = 1000.0

    def validate(self) -> None:
        """Validate the configuration."""
        if self.load_time_ms < 0:
            raise ConfigValidationError(
                "Load time cannot be negative", field="load_time_ms", value=self.load_time_ms
            )
        if self.switchover_ms < 0:
            raise ConfigValidationError(
                "Switchover gap cannot be negative",
                field="switchover_ms",
                value=self.switchover_ms,
            )
        if not 0.0 < self.jitter_low <= 1.0 <= self.jitter_high:
            raise ConfigValidationError(
                "Jitter bounds must satisfy 0 < low <= 1 <= high",
                field="jitter_low",
                value=(self.jitter_low, self.jitter_high),
            )
        if self.ideal_guard < 1:
            raise ConfigValidationError(
                "Search guard must be positive", field="ideal_guard", value=self.ideal_guard
            )
        if self.horizon_ms <= 0:
            raise ConfigValidationError(
                "Comparison horizon must be positive", field="horizon_ms", value=self.horizon_ms
            )
        if self.calibration_ms < 0:
            raise ConfigValidationError(
                "Calibration window cannot be negative",
                field="calibration_ms",
                value=self.calibration_ms,
            )

    def to_dict(self) -> dict[str, Any]:
        """Convert to dict."""
        return {
            "load_time_ms": self.load_time_ms,
            "switchover_ms": self.switchover_ms,
            "jitter_low": self.jitter_low,
            "jitter_high": self.jitter_high,
            "ideal_guard": self.ideal_guard,
            "horizon_ms": self.horizon_ms,
            "calibration_ms": self.calibration_ms,
        }


@dataclass
class AnalyticConfig:
    """Configuration for the analytic DNN model.

    Attributes:
        mem_mode: Memory-wait interpretation (verbatim, bandwidth, off)
        device_index: Compute/memory boundary in FLOPs per byte
    """

    mem_mode: str = "verbatim"
    device_index: float = 139.8

    def validate(self) -> None:
        """Validate the configuration."""
        if self.mem_mode.lower() not in MEM_MODES:
            raise ConfigValidationError(
                f"Invalid memory mode. Must be one of: {MEM_MODES}",
                field="mem_mode",
                value=self.mem_mode,
            )
        if self.device_index <= 0:
            raise ConfigValidationError(
                "Device index must be positive", field="device_index", value=self.device_index
            )

    def to_dict(self) -> dict[str, Any]:
        """Convert to dict."""
        return {"mem_mode": self.mem_mode, "device_index": self.device_index}


@dataclass
class LoggingConfig:
    """Configuration for logging.

    Attributes:
        level: Log level (DEBUG, INFO, WARNING, ERROR)
        format: Log format (json, text)
        file_path: Optional file path for log output
        include_timestamps: Include timestamps in logs
    """

    level: str = "INFO"
    format: str = "text"
    file_path: str | None = None
    include_timestamps: bool = True

    def validate(self) -> None:
        """Validate the configuration."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if self.level.upper() not in valid_levels:
            raise ConfigValidationError(
                f"Invalid log level. Must be one of: {valid_levels}",
                field="level",
                value=self.level,
            )
        valid_formats = {"json", "text"}
        if self.format.lower() not in valid_formats:
            raise ConfigValidationError(
                f"Invalid log format. Must be one of: {valid_formats}",
                field="format",
                value=self.format,
            )

    def to_dict(self) -> dict[str, Any]:
        """Convert to dict."""
        return {
            "level": self.level,
            "format": self.format,
            "file_path": self.file_path,
            "include_timestamps": self.include_timestamps,
        }


def _env_flag_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigValidationError(
            f"{name} must be an integer", field=name, value=raw
        ) from e


def _env_flag_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError as e:
        raise ConfigValidationError(f"{name} must be a number", field=name, value=raw) from e


@dataclass
class Config:
    """Main configuration container.

    This is the root configuration object that contains all subsystem
    configurations. It can be loaded from environment variables or files.
    """

    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    simulator: SimulatorConfig = field(default_factory=SimulatorConfig)
    analytic: AnalyticConfig = field(default_factory=AnalyticConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    # Additional settings
    # CSV files are written here when set; otherwise tables go to stdout
    output_dir: str | None = None
    jobs: int = 1

    def validate(self) -> None:
        """Validate all configuration sections."""
        self.scheduler.validate()
        self.simulator.validate()
        self.analytic.validate()
        self.logging.validate()
        if self.jobs < 1:
            raise ConfigValidationError("jobs must be at least 1", field="jobs", value=self.jobs)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dict."""
        return {
            "scheduler": self.scheduler.to_dict(),
            "simulator": self.simulator.to_dict(),
            "analytic": self.analytic.to_dict(),
            "logging": self.logging.to_dict(),
            "output_dir": self.output_dir,
            "jobs": self.jobs,
        }

    @classmethod
    def from_env(cls) -> "Config":
        """Create configuration from environment variables.

        Environment variables:
            DSTACK_LOG_LEVEL: Log level
            DSTACK_LOG_FORMAT: Log format (json/text)
            DSTACK_OUTPUT_DIR: Directory for CSV output
            DSTACK_SLOT_US: Occupancy slot width in microseconds
            DSTACK_MARGIN_PCT: Knee over-provisioning margin
            DSTACK_MEM_MODE: Analytic memory-wait mode
            DSTACK_JOBS: Worker threads for independent scenarios
        """
        return cls(
            scheduler=SchedulerConfig(
                slot_us=_env_flag_int("DSTACK_SLOT_US", 100),
                margin_pct=_env_flag_float("DSTACK_MARGIN_PCT", 5.0),
            ),
            analytic=AnalyticConfig(
                mem_mode=os.environ.get("DSTACK_MEM_MODE", "verbatim"),
            ),
            logging=LoggingConfig(
                level=os.environ.get("DSTACK_LOG_LEVEL", "INFO"),
                format=os.environ.get("DSTACK_LOG_FORMAT", "text"),
            ),
            output_dir=os.environ.get("DSTACK_OUTPUT_DIR"),
            jobs=_env_flag_int("DSTACK_JOBS", 1),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "Config":
        """Load configuration from a JSON file.

        Args:
            path: Path to the configuration file

        Returns:
            Config instance

        Raises:
            ConfigNotFoundError: If the file doesn't exist
            ConfigValidationError: If the file is invalid
        """
        path = Path(path)
        if not path.exists():
            raise ConfigNotFoundError(f"Configuration file not found: {path}", path=str(path))

        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigValidationError(
                f"Invalid JSON in configuration file: {e}",
                details={"path": str(path)},
            ) from e

        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Config":
        """Create configuration from a dictionary.

        Args:
            data: Configuration dictionary

        Returns:
            Config instance
        """
        scheduler_data = data.get("scheduler", {})
        simulator_data = data.get("simulator", {})
        analytic_data = data.get("analytic", {})
        logging_data = data.get("logging", {})

        return cls(
            scheduler=SchedulerConfig(
                slot_us=scheduler_data.get("slot_us", 100),
                margin_pct=scheduler_data.get("margin_pct", 5.0),
                scoreboard_window=scheduler_data.get("scoreboard_window", 10),
                reduced_gpu_steps=tuple(
                    scheduler_data.get("reduced_gpu_steps", (0.9, 0.8, 0.7, 0.6, 0.5))
                ),
            ),
            simulator=SimulatorConfig(
                load_time_ms=simulator_data.get("load_time_ms", 4000.0),
                switchover_ms=simulator_data.get("switchover_ms", 0.1),
                jitter_low=simulator_data.get("jitter_low", 0.5),
                jitter_high=simulator_data.get("jitter_high", 1.5),
                ideal_guard=simulator_data.get("ideal_guard", 10**6),
                horizon_ms=simulator_data.get("horizon_ms", 100.0),
                calibration_ms=simulator_data.get("calibration_ms", 1000.0),
            ),
            analytic=AnalyticConfig(
                mem_mode=analytic_data.get("mem_mode", "verbatim"),
                device_index=analytic_data.get("device_index", 139.8),
            ),
            logging=LoggingConfig(
                level=logging_data.get("level", "INFO"),
                format=logging_data.get("format", "text"),
                file_path=logging_data.get("file_path"),
                include_timestamps=logging_data.get("include_timestamps", True),
            ),
            output_dir=data.get("output_dir"),
            jobs=data.get("jobs", 1),
        )


# Global configuration instance (lazy-loaded)
_config: Config | None = None


def get_config() -> Config:
    """Get the global configuration instance.

    Creates the configuration from environment on first call.

    Returns:
        Global Config instance
    """
    global _config
    if _config is None:
        _config = Config.from_env()
    return _config


def set_config(config: Config) -> None:
    """Set the global configuration instance.

    Args:
        config: Config instance to use globally
    """
    global _config
    _config = config


__all__ = [
    "MEM_MODES",
    "SchedulerConfig",
    "SimulatorConfig",
    "AnalyticConfig",
    "LoggingConfig",
    "Config",
    "get_config",
    "set_config",
]
