"""Scenario files: validated descriptions of one simulation run."""

import json
from enum import Enum
from importlib import resources
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..catalog import catalog_profile, find_model
from ..exceptions import ProfileError, ScenarioError, UnknownModelError
from ..profiles import ModelConfig, ModelProfile, load_profiles

SCENARIO_PACKAGE = "dstack_sim.scenarios"


class ArrivalProcess(str, Enum):
    """Inter-arrival gap distribution."""

    UNIFORM = "uniform"  # mean gap x U(jitter_low, jitter_high)
    DETERMINISTIC = "deterministic"


class SchedulerKind(str, Enum):
    DSTACK = "dstack"
    TEMPORAL = "temporal"
    GSLICE = "gslice"


class ReconfigMode(str, Enum):
    """How a GPU% change takes effect."""

    OVERLAP = "overlap"  # old instance serves while the standby loads
    DOWNTIME = "downtime"  # model unavailable while the new instance loads


class PlacementMode(str, Enum):
    """How models are spread over several GPUs."""

    PACK = "pack"
    REPLICATE = "replicate"
    EXCLUSIVE = "exclusive"


class ScenarioModel(BaseModel):
    """A model in a scenario; fields left out are taken from the catalog."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)
    rate: float = Field(default=0.0, ge=0)
    knee_pct: float | None = Field(default=None, gt=0, le=100)
    slo_ms: float | None = Field(default=None, gt=0)
    batch: int | None = Field(default=None, ge=1)
    runtime_ms: float | None = Field(default=None, gt=0)
    rate_multipliers: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_multipliers(self) -> "ScenarioModel":
        if any(m < 0 for m in self.rate_multipliers):
            raise ValueError("rate multipliers cannot be negative")
        return self

    def config(self) -> ModelConfig:
        """Resolve to a ModelConfig, filling gaps from the catalog.

        Raises:
            UnknownModelError: A field is missing and the model is not in the catalog
        """
        base = find_model(self.name)
        fields = {
            "knee_pct": self.knee_pct,
            "slo_ms": self.slo_ms,
            "batch": self.batch,
            "runtime_ms": self.runtime_ms,
        }
        missing = [k for k, v in fields.items() if v is None]
        if missing and base is None:
            raise UnknownModelError(
                f"'{self.name}' is not a catalog model and does not set {', '.join(missing)}",
                name=self.name,
            )
        resolved = {k: v if v is not None else getattr(base, k) for k, v in fields.items()}
        return ModelConfig(name=self.name, **resolved)

    def multiplier(self, session: int) -> float:
        """Rate multiplier for ``session``; sessions past the list keep rate 1."""
        if session < len(self.rate_multipliers):
            return self.rate_multipliers[session]
        return 1.0


class ReconfigEvent(BaseModel):
    """A request to change one model's GPU% during the run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    time_ms: float = Field(ge=0)
    model: str
    gpu_pct: float = Field(gt=0, le=100)
    mode: ReconfigMode = ReconfigMode.OVERLAP


class Scenario(BaseModel):
    """Everything needed to reproduce one simulation."""

    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    models: list[ScenarioModel] = Field(min_length=1)
    duration_s: float = Field(gt=0)
    arrival: ArrivalProcess = ArrivalProcess.UNIFORM
    scheduler: SchedulerKind = SchedulerKind.DSTACK
    fill: bool = True
    gpu_count: int = Field(default=1, ge=1)
    placement: PlacementMode = PlacementMode.PACK
    reconfigurations: list[ReconfigEvent] = Field(default_factory=list)
    seed: int | None = Field(default=None, ge=0)
    profiles_csv: str | None = None
    record_requests: bool = False

    # Directory of the scenario file, used to resolve profiles_csv
    base_dir: str | None = Field(default=None, exclude=True)

    @model_validator(mode="after")
    def _check_names(self) -> "Scenario":
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ValueError("model names must be unique")
        for event in self.reconfigurations:
            if event.model not in names:
                raise ValueError(f"reconfiguration targets unknown model '{event.model}'")
        return self

    def configs(self) -> list[ModelConfig]:
        return [m.config() for m in self.models]

    def rates(self) -> dict[str, float]:
        return {m.name: m.rate for m in self.models}

    def profiles(self) -> dict[str, ModelProfile]:
        """Latency grids per model: from ``profiles_csv`` when set, else the catalog.

        Models with neither get no entry.
        """
        profiles: dict[str, ModelProfile] = {}
        if self.profiles_csv is not None:
            path = Path(self.profiles_csv)
            if not path.is_absolute() and self.base_dir is not None:
                path = Path(self.base_dir) / path
            profiles.update(load_profiles(path))
        for m in self.models:
            if m.name not in profiles and find_model(m.name) is not None:
                profiles[m.name] = catalog_profile(m.name)
        return profiles

    def with_seed(self, seed: int) -> "Scenario":
        return self.model_copy(update={"seed": seed})


def shipped_scenarios() -> list[str]:
    """Names of the scenarios bundled with the package."""
    root = resources.files(SCENARIO_PACKAGE)
    return sorted(
        entry.name.removesuffix(".json")
        for entry in root.iterdir()
        if entry.name.endswith(".json")
    )


def _read_source(source: str | Path) -> tuple[str, str | None]:
    """(JSON text, directory) for a path or a shipped scenario name."""
    path = Path(source)
    if path.exists():
        return path.read_text(encoding="utf-8"), str(path.resolve().parent)
    shipped = resources.files(SCENARIO_PACKAGE) / f"{path.stem}.json"
    if path.suffix in ("", ".json") and shipped.is_file():
        return shipped.read_text(encoding="utf-8"), None
    raise FileNotFoundError(f"Scenario not found: {source}")


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario from a JSON path or by the name of a shipped scenario.

    Raises:
        FileNotFoundError: Neither a file nor a shipped scenario
        ScenarioError: The JSON does not describe a valid scenario
    """
    text, base_dir = _read_source(source)
    try:
        data = json.loads(text)
        scenario = Scenario.model_validate(data)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"Scenario {source} is not valid JSON: {e}", path=str(source)) from e
    except ValidationError as e:
        raise ScenarioError(
            f"Invalid scenario {source}: {e.error_count()} error(s)",
            path=str(source),
            details={"errors": e.errors(include_url=False)},
        ) from e

    try:
        scenario.configs()
    except (UnknownModelError, ProfileError) as e:
        raise ScenarioError(e.message, path=str(source)) from e
    return scenario.model_copy(update={"base_dir": base_dir})


__all__ = [
    "ArrivalProcess",
    "SchedulerKind",
    "ReconfigMode",
    "PlacementMode",
    "ScenarioModel",
    "ReconfigEvent",
    "Scenario",
    "shipped_scenarios",
    "load_scenario",
]
