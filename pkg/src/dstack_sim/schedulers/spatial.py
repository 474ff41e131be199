"""Static spatial partitioning and weighted max-min allocation."""

from collections.abc import Sequence
from itertools import groupby

from ..profiles import ModelConfig
from .timeline import CAPACITY


def static_spatial(models: Sequence[ModelConfig], max_gpu: float = CAPACITY) -> dict[str, float]:
    """Give each model its knee%, scaling all of them down when they sum past ``max_gpu``."""
    total = sum(m.knee_pct for m in models)
    scale = max_gpu / total if total > max_gpu else 1.0
    return {m.name: m.knee_pct * scale for m in models}


def wmax_min(knees: Sequence[float], max_gpu: float = CAPACITY) -> list[float]:
    """Fulfil the lowest demand first, then share any surplus in proportion to demand.

    Equal demands are granted together, splitting a shortfall evenly, so
    permuting the input permutes the output. Allocations are returned in
    input order.
    """
    if any(k < 0 for k in knees):
        raise ValueError("GPU demands cannot be negative")
    if max_gpu <= 0:
        raise ValueError("max_gpu must be positive")

    order = sorted(range(len(knees)), key=lambda i: knees[i])
    alloc = [0.0] * len(knees)
    remaining = float(max_gpu)
    for demand, group in groupby(order, key=lambda i: knees[i]):
        members = list(group)
        wanted = float(demand) * len(members)
        if remaining >= wanted:
            grant = float(demand)
            remaining -= wanted
        else:
            grant = remaining / len(members)
            remaining = 0.0
        for i in members:
            alloc[i] = grant

    total_demand = float(sum(knees))
    if remaining > 0 and total_demand > 0:
        for i in range(len(knees)):
            alloc[i] += knees[i] / total_demand * remaining
    return alloc


__all__ = ["static_spatial", "wmax_min"]
