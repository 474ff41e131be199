"""Built-in model catalog and synthesised latency grids.

The catalog lists eight DNNs with their knee GPU%, SLO, operating batch and
runtime at the knee. Each catalog model also has a synthetic 10 x 7 latency
grid shaped so that its runtime at (knee, batch 16) matches the catalog.
Latency is mostly proportional to the batch, so a small batch finishes well
inside a run reserved for the operating batch. For every model but Mobilenet
the per-batch knee sits at the catalog knee.

Mobilenet gets a hand-shaped grid whose knee moves right as the batch grows
(10/20/30/50/50/60/60% for batches 1/2/4/8/10/12/16). Its batch-16 knee is
therefore 60%, not the catalog 20%.
"""

from functools import cache

from .exceptions import UnknownModelError
from .formatters import Table
from .profiles import BATCH_GRID, GPU_GRID, ModelConfig, ModelProfile, profiles_table

# name, knee%, SLO ms, batch, runtime ms at the knee
_CATALOG_ROWS: tuple[tuple[str, float, float, int, float], ...] = (
    ("Mobilenet", 20.0, 25.0, 16, 10.0),
    ("Alexnet", 30.0, 25.0, 16, 8.0),
    ("BERT", 30.0, 25.0, 16, 9.0),
    ("ResNet-50", 40.0, 50.0, 16, 28.0),
    ("VGG-19", 50.0, 100.0, 16, 55.0),
    ("ResNet-18", 30.0, 25.0, 16, 12.0),
    ("Inception", 40.0, 50.0, 16, 25.0),
    ("ResNeXt-50", 50.0, 100.0, 16, 40.0),
)

# batch -> (scale ms, knee%) for the Mobilenet grid
_MOBILENET_SHAPE: dict[int, tuple[float, float]] = {
    1: (1.35, 10.0),
    2: (1.40, 20.0),
    4: (1.50, 30.0),
    8: (1.80, 50.0),
    10: (2.00, 50.0),
    12: (2.20, 60.0),
    16: (2.50, 60.0),
}

_DECIMALS = 4

# Share of the operating-batch latency that does not scale with the batch
_FIXED_SHARE = 0.1


def builtin_catalog() -> list[ModelConfig]:
    """The eight catalog models, in catalog order."""
    return [
        ModelConfig(name=name, knee_pct=knee, slo_ms=slo, batch=batch, runtime_ms=runtime)
        for name, knee, slo, batch, runtime in _CATALOG_ROWS
    ]


def catalog_names() -> list[str]:
    return [row[0] for row in _CATALOG_ROWS]


def find_model(name: str) -> ModelConfig | None:
    """Catalog entry by name, or None when absent."""
    for model in builtin_catalog():
        if model.name == name:
            return model
    return None


def catalog_model(name: str) -> ModelConfig:
    """Catalog entry by name.

    Raises:
        UnknownModelError: If the name is not in the catalog
    """
    model = find_model(name)
    if model is None:
        raise UnknownModelError(f"Unknown catalog model '{name}'", name=name)
    return model


def _generic_latency(model: ModelConfig, gpu_pct: int, batch: int) -> float:
    # Linear in batch, hyperbolic in GPU%, equal to runtime_ms at (knee, model.batch)
    share = _FIXED_SHARE + (1 - _FIXED_SHARE) * batch / model.batch
    return (model.runtime_ms / 2) * share * (1 + model.knee_pct / gpu_pct)


def _mobilenet_latency(gpu_pct: int, batch: int) -> float:
    scale, knee = _MOBILENET_SHAPE[batch]
    return scale * (1 + knee / gpu_pct)


@cache
def catalog_profile(name: str) -> ModelProfile:
    """Synthetic latency grid for a catalog model."""
    model = catalog_model(name)
    cells: dict[tuple[int, int], float] = {}
    for pct in GPU_GRID:
        for batch in BATCH_GRID:
            if name == "Mobilenet":
                value = _mobilenet_latency(pct, batch)
            else:
                value = _generic_latency(model, pct, batch)
            cells[(pct, batch)] = round(value, _DECIMALS)
    return ModelProfile.from_cells(name, cells)


def catalog_profiles() -> dict[str, ModelProfile]:
    """Synthetic grids for every catalog model, keyed by name."""
    return {name: catalog_profile(name) for name in catalog_names()}


def catalog_profiles_table() -> Table:
    """Every catalog grid in the profile CSV layout."""
    return profiles_table(catalog_profiles().values())


__all__ = [
    "builtin_catalog",
    "catalog_names",
    "find_model",
    "catalog_model",
    "catalog_profile",
    "catalog_profiles",
    "catalog_profiles_table",
]
