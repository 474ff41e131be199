"""Unit tests for exception hierarchy."""

import pytest

from dstack_sim.exceptions import (
    AdmissionError,
    AnalyticModelError,
    BatchOutOfRangeError,
    ClassificationError,
    ConfigError,
    ConfigNotFoundError,
    ConfigValidationError,
    DStackSimError,
    KernelIndexError,
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
    UnknownModelError,
)


class TestDStackSimError:
    """Tests for base exception."""

    def test_message_only(self) -> None:
        """Test exception with message only."""
        exc = DStackSimError("Something went wrong")
        assert str(exc) == "Something went wrong"
        assert exc.message == "Something went wrong"
        assert exc.details == {}
        assert exc.suggestion is None

    def test_with_details(self) -> None:
        """Test exception with details."""
        exc = DStackSimError("Error occurred", details={"model": "Alexnet", "slot": 42})
        assert "Alexnet" in str(exc)
        assert exc.details["slot"] == 42

    def test_custom_suggestion_wins(self) -> None:
        """A suggestion passed in overrides the class default."""
        exc = SchedulerError("bad", suggestion="Try fewer models")
        assert exc.suggestion == "Try fewer models"
        assert "Try fewer models" in exc.format_short()

    def test_format_short_omits_details(self) -> None:
        """format_short keeps message and suggestion only."""
        exc = OptimizerError("SLO must be positive", details={"slo_ms": -1})
        short = exc.format_short()
        assert short.startswith("SLO must be positive")
        assert "slo_ms" not in short


class TestAnalyticErrors:
    """Tests for analytic model errors."""

    def test_kernel_index_error_is_index_error(self) -> None:
        """KernelIndexError can be caught as an IndexError."""
        exc = KernelIndexError("out of range", index=51, k_max=50)
        assert isinstance(exc, IndexError)
        assert isinstance(exc, AnalyticModelError)
        assert exc.index == 51
        assert exc.k_max == 50

    def test_classification_error(self) -> None:
        """Test classification error inheritance."""
        assert isinstance(ClassificationError("zero bytes"), AnalyticModelError)


class TestProfileErrors:
    """Tests for profile error hierarchy."""

    def test_format_error_missing_column(self) -> None:
        """A missing column names the column in the suggestion."""
        exc = ProfileFormatError("Missing required column 'batch'", column="batch")
        assert exc.column == "batch"
        assert exc.line is None
        assert exc.suggestion is not None
        assert "'batch'" in exc.suggestion

    def test_format_error_line(self) -> None:
        """A row error names the line number in the suggestion."""
        exc = ProfileFormatError("Line 7: bad float", line=7)
        assert exc.line == 7
        assert exc.suggestion is not None
        assert "line 7" in exc.suggestion

    def test_validation_error_cells(self) -> None:
        """Test validation error carries offending cells."""
        exc = ProfileValidationError("rising", cells=[(30.0, 4), (40.0, 4)])
        assert exc.cells == [(30.0, 4), (40.0, 4)]
        assert isinstance(exc, ProfileError)

    def test_batch_out_of_range(self) -> None:
        """Test batch out of range fields."""
        exc = BatchOutOfRangeError("too big", batch=32, max_batch=16)
        assert exc.batch == 32
        assert exc.max_batch == 16

    def test_unknown_model(self) -> None:
        """Unknown models point at the catalog command."""
        exc = UnknownModelError("unknown", name="GPT")
        assert exc.name == "GPT"
        assert exc.suggestion is not None
        assert "dstack-sim catalog" in exc.suggestion


class TestSchedulerErrors:
    """Tests for scheduler error hierarchy."""

    def test_admission_error(self) -> None:
        """Test admission error names the model."""
        exc = AdmissionError("runtime above SLO", model="VGG-19")
        assert exc.model == "VGG-19"
        assert isinstance(exc, SchedulerError)
        assert exc.suggestion is not None
        assert "VGG-19" in exc.suggestion

    def test_search_guard(self) -> None:
        """Test guard error carries estimate and limit."""
        exc = SearchGuardExceededError("too large", estimate=10**7, limit=10**6)
        assert exc.estimate == 10**7
        assert exc.limit == 10**6


class TestSimulatorErrors:
    """Tests for simulator error hierarchy."""

    @pytest.mark.parametrize("cls", [ScenarioError, ReconfigurationError, PlacementError])
    def test_inheritance(self, cls: type[SimulatorError]) -> None:
        """Every simulator error is a DStackSimError."""
        exc = cls("failed")
        assert isinstance(exc, SimulatorError)
        assert isinstance(exc, DStackSimError)

    def test_scenario_error_path(self) -> None:
        """Test scenario error keeps its path."""
        exc = ScenarioError("invalid", path="c4.json")
        assert exc.path == "c4.json"


class TestConfigErrors:
    """Tests for config error hierarchy."""

    def test_config_error(self) -> None:
        """Test base config error."""
        assert isinstance(ConfigError("Configuration error"), DStackSimError)

    def test_config_validation_error(self) -> None:
        """Test config validation error."""
        exc = ConfigValidationError("Invalid value", field="slot_us", value=0)
        assert exc.field == "slot_us"
        assert exc.value == 0
        assert exc.suggestion is not None
        assert "slot_us" in exc.suggestion

    def test_config_not_found(self) -> None:
        """Test config not found error."""
        exc = ConfigNotFoundError("missing", path="/nope.json")
        assert exc.path == "/nope.json"
        assert "/nope.json" in str(exc)
