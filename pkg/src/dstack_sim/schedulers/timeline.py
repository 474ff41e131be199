"""Slot-granular GPU occupancy.

A timeline divides a time span into equal slots and records the GPU% in use
during each slot. Placement helpers search for starts where a reservation
fits under the 100% capacity.
"""

import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

CAPACITY = 100.0
# Tolerance for sums of fractional GPU% such as 100/3
EPS = 1e-9

Interval = tuple[int, int]  # [start, end) in slots


def ms_to_slots(ms: float, slot_ms: float) -> int:
    """Slots needed to cover ``ms`` (rounded up)."""
    return math.ceil(round(ms / slot_ms, 6))


def ms_to_slot_index(ms: float, slot_ms: float) -> int:
    """Slot containing ``ms`` (rounded down)."""
    return math.floor(round(ms / slot_ms, 6))


def overlaps(start: int, end: int, intervals: Sequence[Interval]) -> bool:
    return any(start < b and a < end for a, b in intervals)


class Timeline:
    """GPU% per slot over a fixed span."""

    def __init__(self, n_slots: int, slot_ms: float, capacity: float = CAPACITY) -> None:
        if n_slots < 0:
            raise ValueError("n_slots cannot be negative")
        if slot_ms <= 0:
            raise ValueError("slot_ms must be positive")
        self.slot_ms = slot_ms
        self.capacity = capacity
        self.occupancy: npt.NDArray[np.float64] = np.zeros(n_slots, dtype=np.float64)

    @classmethod
    def for_duration(cls, length_ms: float, slot_ms: float) -> "Timeline":
        return cls(ms_to_slots(length_ms, slot_ms), slot_ms)

    @property
    def n_slots(self) -> int:
        return int(self.occupancy.size)

    @property
    def length_ms(self) -> float:
        return self.n_slots * self.slot_ms

    def to_slots(self, ms: float) -> int:
        return ms_to_slots(ms, self.slot_ms)

    def slot_at(self, ms: float) -> int:
        return ms_to_slot_index(ms, self.slot_ms)

    def copy(self) -> "Timeline":
        other = Timeline(self.n_slots, self.slot_ms, self.capacity)
        other.occupancy = self.occupancy.copy()
        return other

    def fits(self, start: int, length: int, pct: float) -> bool:
        """Whether ``pct`` can be added over ``[start, start + length)``."""
        if start < 0 or start + length > self.n_slots:
            return False
        window = self.occupancy[start : start + length]
        return bool(np.all(window + pct <= self.capacity + EPS))

    def add(self, start: int, length: int, pct: float) -> None:
        self.occupancy[start : start + length] += pct

    def remove(self, start: int, length: int, pct: float) -> None:
        window = self.occupancy[start : start + length]
        window -= pct
        # Clear float residue left by fractional reservations
        window[np.abs(window) < EPS] = 0.0

    def _candidate_ok(
        self, start: int, length: int, pct: float, avoid: Sequence[Interval]
    ) -> bool:
        return self.fits(start, length, pct) and not overlaps(start, start + length, avoid)

    def earliest_fit(
        self,
        pct: float,
        length: int,
        lo: int,
        hi: int,
        avoid: Sequence[Interval] = (),
    ) -> int | None:
        """First start in ``[lo, hi]`` where the reservation fits and avoids ``avoid``."""
        for start in range(max(lo, 0), hi + 1):
            if self._candidate_ok(start, length, pct, avoid):
                return start
        return None

    def latest_fit(
        self,
        pct: float,
        length: int,
        lo: int,
        hi: int,
        avoid: Sequence[Interval] = (),
    ) -> int | None:
        """Last start in ``[lo, hi]`` where the reservation fits and avoids ``avoid``."""
        for start in range(hi, max(lo, 0) - 1, -1):
            if self._candidate_ok(start, length, pct, avoid):
                return start
        return None

    def free_span(self, start: int, pct: float, limit: int | None = None) -> int:
        """Contiguous slots from ``start`` that can take ``pct`` more, up to ``limit``."""
        end = self.n_slots if limit is None else min(limit, self.n_slots)
        if start >= end:
            return 0
        blocked = np.nonzero(self.occupancy[start:end] + pct > self.capacity + EPS)[0]
        return int(blocked[0]) if blocked.size else end - start

    def mean(self) -> float:
        """Time-averaged GPU%."""
        return float(self.occupancy.mean()) if self.n_slots else 0.0

    def max(self) -> float:
        return float(self.occupancy.max()) if self.n_slots else 0.0


__all__ = [
    "CAPACITY",
    "EPS",
    "Interval",
    "ms_to_slots",
    "ms_to_slot_index",
    "overlaps",
    "Timeline",
]
