"""Pytest configuration and fixtures for dstack-sim tests."""

from __future__ import annotations

import os
import tempfile
from collections.abc import Callable, Generator
from pathlib import Path

import pytest

from dstack_sim.catalog import builtin_catalog, catalog_model, catalog_profiles
from dstack_sim.config import (
    Config,
    LoggingConfig,
    SchedulerConfig,
    SimulatorConfig,
    set_config,
)
from dstack_sim.profiles import BATCH_GRID, GPU_GRID, ModelConfig, ModelProfile

# =============================================================================
# Environment Fixtures
# =============================================================================


@pytest.fixture(autouse=True)
def clean_environment() -> Generator[None, None, None]:
    """Ensure clean environment and global config for each test."""
    original_env = os.environ.copy()

    yield

    os.environ.clear()
    os.environ.update(original_env)
    set_config(Config())


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


# =============================================================================
# Configuration Fixtures
# =============================================================================


@pytest.fixture
def test_config() -> Config:
    """Create a test configuration with default scheduling constants."""
    return Config(
        scheduler=SchedulerConfig(slot_us=100, margin_pct=5.0),
        simulator=SimulatorConfig(load_time_ms=4000.0, switchover_ms=0.1),
        logging=LoggingConfig(level="DEBUG", format="text"),
    )


# =============================================================================
# Catalog Fixtures
# =============================================================================


@pytest.fixture
def catalog() -> list[ModelConfig]:
    """The eight built-in catalog models."""
    return builtin_catalog()


@pytest.fixture
def profiles() -> dict[str, ModelProfile]:
    """Synthesised latency grids of every catalog model."""
    return catalog_profiles()


@pytest.fixture
def three_models() -> list[ModelConfig]:
    """Alexnet, ResNet-50 and VGG-19 at their knees."""
    return [catalog_model(name) for name in ("Alexnet", "ResNet-50", "VGG-19")]


@pytest.fixture
def four_models() -> list[ModelConfig]:
    """The four-model mix: Alexnet, Mobilenet, ResNet-50 and VGG-19."""
    return [catalog_model(name) for name in ("Alexnet", "Mobilenet", "ResNet-50", "VGG-19")]


# =============================================================================
# Profile Fixtures
# =============================================================================


ProfileRows = list[tuple[str, int, int, float]]


def _write_profile_csv(path: Path, rows: ProfileRows) -> Path:
    lines = ["model,gpu_pct,batch,latency_ms"]
    lines += [f"{m},{pct},{b},{lat!r}" for m, pct, b, lat in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def write_profile() -> Callable[[Path, ProfileRows], Path]:
    """Writer of ``model,gpu_pct,batch,latency_ms`` CSV files."""
    return _write_profile_csv


@pytest.fixture
def flat_profile_csv(temp_dir: Path) -> Path:
    """A profile whose latency never improves with more GPU."""
    rows = [("Flat", pct, b, 5.0 + b) for pct in GPU_GRID for b in BATCH_GRID]
    return _write_profile_csv(temp_dir / "flat.csv", rows)
