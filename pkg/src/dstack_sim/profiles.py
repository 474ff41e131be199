"""Measured latency grids and per-model operating configurations.

A profile maps (GPU%, batch) grid cells to inference latency in ms. Queries
between grid points use bilinear interpolation; GPU% outside the grid is
clamped to the nearest grid column.
"""

import csv
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import (
    BatchOutOfRangeError,
    ProfileError,
    ProfileFormatError,
    ProfileValidationError,
)
from .formatters import Table

GPU_GRID: tuple[int, ...] = (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
BATCH_GRID: tuple[int, ...] = (1, 2, 4, 8, 10, 12, 16)

PROFILE_COLUMNS = ("model", "gpu_pct", "batch", "latency_ms")
CATALOG_COLUMNS = ("name", "knee_pct", "slo_ms", "batch", "runtime_ms")


class ModelConfig(BaseModel):
    """Operating point of one model as the schedulers see it."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    knee_pct: float = Field(gt=0, le=100)
    slo_ms: float = Field(gt=0)
    batch: int = Field(ge=1)
    runtime_ms: float = Field(gt=0)
    weight: float = Field(default=1.0, ge=0)

    def with_gpu(self, gpu_pct: float, runtime_ms: float) -> "ModelConfig":
        """Same model at a different GPU% and runtime."""
        return self.model_copy(update={"knee_pct": gpu_pct, "runtime_ms": runtime_ms})


@dataclass(frozen=True)
class ModelProfile:
    """Latency grid f_L(gpu_pct, batch) for one model.

    ``latencies[i, j]`` is the latency at ``gpu_pcts[i]`` and ``batches[j]``.
    """

    name: str
    gpu_pcts: tuple[int, ...]
    batches: tuple[int, ...]
    latencies: npt.NDArray[np.float64] = field(compare=False, repr=False)

    def __post_init__(self) -> None:
        latencies = np.array(self.latencies, dtype=np.float64)
        latencies.setflags(write=False)
        object.__setattr__(self, "latencies", latencies)
        validate_grid(self.name, self.gpu_pcts, self.batches, latencies)

    @property
    def max_batch(self) -> int:
        return self.batches[-1]

    def cell(self, gpu_pct: int, batch: int) -> float:
        """Stored latency at an exact grid point."""
        try:
            i = self.gpu_pcts.index(gpu_pct)
            j = self.batches.index(batch)
        except ValueError:
            raise ProfileError(
                f"({gpu_pct}%, b={batch}) is not a grid point of '{self.name}'"
            ) from None
        return float(self.latencies[i, j])

    def cells(self) -> Iterable[tuple[int, int, float]]:
        """Every grid point as (gpu_pct, batch, latency_ms), GPU-major."""
        for i, pct in enumerate(self.gpu_pcts):
            for j, b in enumerate(self.batches):
                yield pct, b, float(self.latencies[i, j])

    @classmethod
    def from_cells(
        cls, name: str, cells: Mapping[tuple[int, int], float]
    ) -> "ModelProfile":
        """Build a profile from a {(gpu_pct, batch): latency} mapping."""
        pcts = tuple(sorted({p for p, _ in cells}))
        batches = tuple(sorted({b for _, b in cells}))
        missing = [(p, b) for p in pcts for b in batches if (p, b) not in cells]
        if missing:
            raise ProfileValidationError(
                f"Profile '{name}' is missing {len(missing)} grid cell(s)",
                cells=[(float(p), b) for p, b in missing],
            )
        grid = np.array([[cells[(p, b)] for b in batches] for p in pcts], dtype=np.float64)
        return cls(name=name, gpu_pcts=pcts, batches=batches, latencies=grid)


def validate_grid(
    name: str,
    gpu_pcts: tuple[int, ...],
    batches: tuple[int, ...],
    latencies: npt.NDArray[np.float64],
) -> None:
    """Check shape, ordering, positivity and GPU% monotonicity of a grid."""
    if not gpu_pcts or not batches:
        raise ProfileValidationError(f"Profile '{name}' has an empty grid")
    if latencies.shape != (len(gpu_pcts), len(batches)):
        raise ProfileValidationError(
            f"Profile '{name}' grid shape {latencies.shape} does not match "
            f"{len(gpu_pcts)} GPU% x {len(batches)} batches"
        )
    if list(gpu_pcts) != sorted(set(gpu_pcts)) or list(batches) != sorted(set(batches)):
        raise ProfileValidationError(f"Profile '{name}' grid axes must be strictly increasing")
    if gpu_pcts[0] <= 0 or gpu_pcts[-1] > 100:
        raise ProfileValidationError(f"Profile '{name}' GPU% values must lie in (0, 100]")
    if batches[0] != 1:
        raise ProfileValidationError(f"Profile '{name}' must include batch 1")

    bad = np.argwhere(~(latencies > 0))
    if bad.size:
        raise ProfileValidationError(
            f"Profile '{name}' has non-positive latencies",
            cells=[(float(gpu_pcts[i]), batches[j]) for i, j in bad],
        )

    # Latency must not rise as GPU% grows
    rising = np.argwhere(np.diff(latencies, axis=0) > 0)
    if rising.size:
        cells = []
        for i, j in rising:
            cells.append((float(gpu_pcts[i]), batches[j]))
            cells.append((float(gpu_pcts[i + 1]), batches[j]))
        raise ProfileValidationError(
            f"Profile '{name}' latency increases with GPU% at "
            + ", ".join(f"({p:g}%, b={b})" for p, b in cells),
            cells=cells,
        )


def _read_rows(source: TextIO | str | Path, columns: tuple[str, ...]) -> list[dict[str, str]]:
    if isinstance(source, str | Path):
        with open(source, newline="") as f:
            return _read_rows(f, columns)

    reader = csv.DictReader(source)
    header = reader.fieldnames or []
    for column in columns:
        if column not in header:
            raise ProfileFormatError(f"Missing required column '{column}'", column=column)
    return list(reader)


def load_profiles(source: TextIO | str | Path) -> dict[str, ModelProfile]:
    """Parse a ``model,gpu_pct,batch,latency_ms`` CSV holding one or more models.

    Raises:
        ProfileFormatError: Missing columns, unparsable values or duplicate cells
        ProfileValidationError: Incomplete, non-positive or non-monotone grids
    """
    rows = _read_rows(source, PROFILE_COLUMNS)
    grids: dict[str, dict[tuple[int, int], float]] = {}
    for offset, row in enumerate(rows):
        line = offset + 2  # header is line 1
        try:
            name = row["model"].strip()
            pct = int(row["gpu_pct"])
            batch = int(row["batch"])
            latency = float(row["latency_ms"])
        except (TypeError, ValueError) as e:
            raise ProfileFormatError(f"Line {line}: {e}", line=line) from e
        if not name:
            raise ProfileFormatError(f"Line {line}: empty model name", line=line)

        cells = grids.setdefault(name, {})
        if (pct, batch) in cells:
            raise ProfileFormatError(
                f"Line {line}: duplicate cell ({pct}%, b={batch}) for '{name}'", line=line
            )
        cells[(pct, batch)] = latency

    if not grids:
        raise ProfileFormatError("Profile CSV has no rows")
    return {name: ModelProfile.from_cells(name, cells) for name, cells in grids.items()}


def load_profile(source: TextIO | str | Path, name: str | None = None) -> ModelProfile:
    """Parse a profile CSV and return one model's grid.

    Args:
        source: Open CSV stream or path
        name: Model to select when the CSV holds several
    """
    profiles = load_profiles(source)
    if name is not None:
        if name not in profiles:
            raise ProfileError(
                f"Model '{name}' not found in profile CSV",
                details={"available": sorted(profiles)},
            )
        return profiles[name]
    if len(profiles) > 1:
        raise ProfileError(
            "Profile CSV holds several models; select one by name",
            details={"available": sorted(profiles)},
        )
    return next(iter(profiles.values()))


def latency(profile: ModelProfile, gpu_pct: float, batch: int) -> float:
    """Bilinearly interpolated latency in ms.

    GPU% is clamped to the grid; batches above ``max_batch`` are rejected.
    """
    if batch < 1 or batch > profile.max_batch:
        raise BatchOutOfRangeError(
            f"Batch {batch} outside 1..{profile.max_batch} for '{profile.name}'",
            batch=batch,
            max_batch=profile.max_batch,
        )
    # np.interp clamps outside the axis range, which gives the GPU% clamp for free
    column = np.array([np.interp(batch, profile.batches, row) for row in profile.latencies])
    return float(np.interp(gpu_pct, profile.gpu_pcts, column))


def knee_from_profile(profile: ModelProfile, batch: int) -> int:
    """Grid GPU% maximising 1/(f_L^2 * gpu_pct) at ``batch``; ties go to the smaller GPU%."""
    if batch not in profile.batches:
        raise ProfileError(
            f"Batch {batch} is not a grid batch of '{profile.name}'",
            details={"batches": list(profile.batches)},
        )
    column = profile.latencies[:, profile.batches.index(batch)]
    metric = 1.0 / (column**2 * np.asarray(profile.gpu_pcts, dtype=np.float64))
    return profile.gpu_pcts[int(np.argmax(metric))]


def profiles_table(profiles: Iterable[ModelProfile]) -> Table:
    """Export grids in the profile CSV layout."""
    table = Table(PROFILE_COLUMNS)
    for profile in profiles:
        for pct, batch, value in profile.cells():
            table.append(profile.name, pct, batch, value)
    return table


def catalog_table(models: Iterable[ModelConfig]) -> Table:
    """Export model configurations as ``name,knee_pct,slo_ms,batch,runtime_ms``."""
    table = Table(CATALOG_COLUMNS)
    for m in models:
        table.append(m.name, m.knee_pct, m.slo_ms, m.batch, m.runtime_ms)
    return table


def load_catalog(source: TextIO | str | Path) -> list[ModelConfig]:
    """Parse a catalog CSV written by :func:`catalog_table`."""
    rows = _read_rows(source, CATALOG_COLUMNS)
    models = []
    for offset, row in enumerate(rows):
        line = offset + 2
        try:
            models.append(
                ModelConfig(
                    name=row["name"],
                    knee_pct=float(row["knee_pct"]),
                    slo_ms=float(row["slo_ms"]),
                    batch=int(row["batch"]),
                    runtime_ms=float(row["runtime_ms"]),
                )
            )
        except ValueError as e:
            # pydantic's ValidationError is a ValueError subclass
            raise ProfileFormatError(f"Line {line}: {e}", line=line) from e
    return models


__all__ = [
    "GPU_GRID",
    "BATCH_GRID",
    "PROFILE_COLUMNS",
    "CATALOG_COLUMNS",
    "ModelConfig",
    "ModelProfile",
    "validate_grid",
    "load_profiles",
    "load_profile",
    "latency",
    "knee_from_profile",
    "profiles_table",
    "catalog_table",
    "load_catalog",
]
