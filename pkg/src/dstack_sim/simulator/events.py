"""Event kinds and the time-ordered event queue of the simulator."""

import heapq
import itertools
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any


class EventKind(IntEnum):
    """Simulator events; at equal times lower values are handled first.

    Ends come first so that capacity freed at an instant is visible to
    everything else happening at that instant. Arrivals come last so that a
    run starting at the same instant does not pick them up.
    """

    RUN_END = 0
    RECONFIG_DONE = 1
    RECONFIG = 2
    SESSION_START = 3
    RUN_START = 4
    ARRIVAL = 5


@dataclass(frozen=True, order=True)
class Event:
    """Something the engine must handle at ``time_us``."""

    time_us: int
    kind: EventKind
    seq: int
    payload: Any = field(default=None, compare=False)


class EventQueue:
    """Min-heap of events ordered by (time, kind, insertion order)."""

    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._counter = itertools.count()

    def push(self, time_us: int, kind: EventKind, payload: Any = None) -> Event:
        if time_us < 0:
            raise ValueError(f"Event time cannot be negative: {time_us}")
        event = Event(time_us, kind, next(self._counter), payload)
        heapq.heappush(self._heap, event)
        return event

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def peek(self) -> Event | None:
        return self._heap[0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)


__all__ = ["EventKind", "Event", "EventQueue"]
