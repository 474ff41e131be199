"""Unit tests for configuration module."""

import json
from pathlib import Path

import pytest

from dstack_sim.config import (
    AnalyticConfig,
    Config,
    LoggingConfig,
    SchedulerConfig,
    SimulatorConfig,
    get_config,
    set_config,
)
from dstack_sim.exceptions import ConfigNotFoundError, ConfigValidationError


class TestSchedulerConfig:
    """Tests for SchedulerConfig."""

    def test_defaults(self) -> None:
        """Test default values."""
        config = SchedulerConfig()
        assert config.slot_us == 100
        assert config.slot_ms == 0.1
        assert config.margin_pct == 5.0
        assert config.scoreboard_window == 10
        assert config.reduced_gpu_steps == (0.9, 0.8, 0.7, 0.6, 0.5)

    def test_validate_success(self) -> None:
        """Test validation passes for valid config."""
        SchedulerConfig(slot_us=50, margin_pct=0.0).validate()

    @pytest.mark.parametrize(
        ("kwargs", "field"),
        [
            ({"slot_us": 0}, "slot_us"),
            ({"margin_pct": 60.0}, "margin_pct"),
            ({"scoreboard_window": 0}, "scoreboard_window"),
            ({"reduced_gpu_steps": (0.9, 1.0)}, "reduced_gpu_steps"),
        ],
    )
    def test_validate_rejects(self, kwargs: dict[str, object], field: str) -> None:
        """Out-of-range values name their field."""
        config = SchedulerConfig(**kwargs)  # type: ignore[arg-type]
        with pytest.raises(ConfigValidationError) as exc_info:
            config.validate()
        assert exc_info.value.field == field


class TestSimulatorConfig:
    """Tests for SimulatorConfig."""

    def test_defaults(self) -> None:
        """Test default values."""
        config = SimulatorConfig()
        assert config.load_time_ms == 4000.0
        assert config.switchover_ms == 0.1
        assert (config.jitter_low, config.jitter_high) == (0.5, 1.5)
        assert config.ideal_guard == 10**6
        assert config.horizon_ms == 100.0
        assert config.calibration_ms == 1000.0

    @pytest.mark.parametrize(
        ("kwargs", "field"),
        [
            ({"load_time_ms": -1.0}, "load_time_ms"),
            ({"switchover_ms": -0.1}, "switchover_ms"),
            ({"jitter_low": 1.2}, "jitter_low"),
            ({"jitter_high": 0.8}, "jitter_low"),
            ({"ideal_guard": 0}, "ideal_guard"),
            ({"horizon_ms": 0.0}, "horizon_ms"),
            ({"calibration_ms": -1.0}, "calibration_ms"),
        ],
    )
    def test_validate_rejects(self, kwargs: dict[str, object], field: str) -> None:
        """Out-of-range values name their field."""
        config = SimulatorConfig(**kwargs)  # type: ignore[arg-type]
        with pytest.raises(ConfigValidationError) as exc_info:
            config.validate()
        assert exc_info.value.field == field


class TestAnalyticConfig:
    """Tests for AnalyticConfig."""

    def test_defaults(self) -> None:
        """Test default values."""
        config = AnalyticConfig()
        assert config.mem_mode == "verbatim"
        assert config.device_index == 139.8

    def test_mode_is_case_insensitive(self) -> None:
        """Test upper-case modes are accepted."""
        AnalyticConfig(mem_mode="OFF").validate()

    def test_validate_invalid_mode(self) -> None:
        """Test validation fails for unknown modes."""
        with pytest.raises(ConfigValidationError) as exc_info:
            AnalyticConfig(mem_mode="cache").validate()
        assert exc_info.value.field == "mem_mode"


class TestLoggingConfig:
    """Tests for LoggingConfig."""

    def test_defaults(self) -> None:
        """Test default values."""
        config = LoggingConfig()
        assert config.level == "INFO"
        assert config.format == "text"
        assert config.include_timestamps is True

    def test_validate_invalid_level(self) -> None:
        """Test validation fails for invalid log level."""
        with pytest.raises(ConfigValidationError) as exc_info:
            LoggingConfig(level="VERBOSE").validate()
        assert exc_info.value.field == "level"

    def test_validate_invalid_format(self) -> None:
        """Test validation fails for invalid format."""
        with pytest.raises(ConfigValidationError) as exc_info:
            LoggingConfig(format="xml").validate()
        assert exc_info.value.field == "format"


class TestConfig:
    """Tests for main Config class."""

    def test_defaults(self) -> None:
        """Test default values."""
        config = Config()
        assert config.output_dir is None
        assert config.jobs == 1
        assert isinstance(config.scheduler, SchedulerConfig)
        assert isinstance(config.simulator, SimulatorConfig)

    def test_validate_all_sections(self) -> None:
        """Test validate calls all section validators."""
        with pytest.raises(ConfigValidationError):
            Config(simulator=SimulatorConfig(horizon_ms=-5)).validate()

    def test_validate_jobs(self) -> None:
        """Test at least one worker is required."""
        with pytest.raises(ConfigValidationError) as exc_info:
            Config(jobs=0).validate()
        assert exc_info.value.field == "jobs"

    def test_to_dict(self) -> None:
        """Test converting to dict."""
        data = Config(output_dir="results", jobs=2).to_dict()
        assert data["output_dir"] == "results"
        assert data["jobs"] == 2
        assert data["scheduler"]["reduced_gpu_steps"] == [0.9, 0.8, 0.7, 0.6, 0.5]
        assert set(data) >= {"scheduler", "simulator", "analytic", "logging"}

    def test_from_env(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test loading from environment variables."""
        monkeypatch.setenv("DSTACK_LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("DSTACK_SLOT_US", "50")
        monkeypatch.setenv("DSTACK_MARGIN_PCT", "2.5")
        monkeypatch.setenv("DSTACK_MEM_MODE", "off")
        monkeypatch.setenv("DSTACK_OUTPUT_DIR", "out")
        monkeypatch.setenv("DSTACK_JOBS", "4")

        config = Config.from_env()
        assert config.logging.level == "DEBUG"
        assert config.scheduler.slot_us == 50
        assert config.scheduler.margin_pct == 2.5
        assert config.analytic.mem_mode == "off"
        assert config.output_dir == "out"
        assert config.jobs == 4

    def test_from_env_rejects_non_integer(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test a malformed integer variable is reported by name."""
        monkeypatch.setenv("DSTACK_SLOT_US", "fast")
        with pytest.raises(ConfigValidationError) as exc_info:
            Config.from_env()
        assert exc_info.value.field == "DSTACK_SLOT_US"

    def test_from_file(self, temp_dir: Path) -> None:
        """Test loading from file."""
        config_path = temp_dir / "config.json"
        config_path.write_text(
            json.dumps(
                {
                    "scheduler": {"slot_us": 200, "reduced_gpu_steps": [0.75]},
                    "simulator": {"load_time_ms": 100.0},
                    "logging": {"level": "WARNING"},
                    "jobs": 3,
                }
            )
        )

        config = Config.from_file(config_path)
        assert config.scheduler.slot_us == 200
        assert config.scheduler.reduced_gpu_steps == (0.75,)
        assert config.simulator.load_time_ms == 100.0
        assert config.simulator.switchover_ms == 0.1
        assert config.logging.level == "WARNING"
        assert config.jobs == 3

    def test_from_file_not_found(self, temp_dir: Path) -> None:
        """Test error when file not found."""
        with pytest.raises(ConfigNotFoundError):
            Config.from_file(temp_dir / "nonexistent.json")

    def test_from_file_invalid_json(self, temp_dir: Path) -> None:
        """Test error when file contains invalid JSON."""
        config_path = temp_dir / "invalid.json"
        config_path.write_text("not valid json")
        with pytest.raises(ConfigValidationError):
            Config.from_file(config_path)

    def test_from_dict_round_trip(self) -> None:
        """to_dict output loads back into an equal configuration."""
        original = Config(output_dir="/custom/output", jobs=2)
        assert Config.from_dict(original.to_dict()) == original


class TestGlobalConfig:
    """Tests for global config functions."""

    def test_get_config_creates_default(self) -> None:
        """Test get_config creates config from env."""
        import dstack_sim.config as config_module

        config_module._config = None
        assert isinstance(get_config(), Config)

    def test_set_config(self) -> None:
        """Test setting global config."""
        set_config(Config(jobs=7))
        assert get_config().jobs == 7
