"""Shared domain types: trace events, the simulation clock and request outcomes."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

VideoId = int


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class TraceError(SimulationError, ValueError):
    pass


class NonMonotonicTime(TraceError):
    def __init__(self, index: int):
        super().__init__(f"arrival at index {index} precedes the previous event")
        self.index = index


class NegativeField(TraceError):
    def __init__(self, index: int, field: str):
        super().__init__(f"event {index}: field {field!r} must be non-negative")
        self.index = index
        self.field = field


class TimeRegression(SimulationError, ValueError):
    pass


class InvariantViolation(SimulationError, AssertionError):
    """A structural invariant of a cache state was found broken."""


@dataclass(frozen=True, slots=True)
class TraceEvent:
    arrival: float
    client: int
    video: VideoId
    patience: float


@dataclass(slots=True)
class SimClock:
    """Continuous simulation time plus a discrete per-request counter.

    ``event_count`` is what page recency ages are measured in.
    """

    now: float = 0.0
    event_count: int = 0


def advance(clock: SimClock, event: TraceEvent) -> SimClock:
    """Move ``clock`` forward to ``event`` in place and return it."""
    if event.arrival < clock.now:
        raise TimeRegression(
            f"event at t={event.arrival} arrives before clock time {clock.now}"
        )
    clock.now = event.arrival
    clock.event_count += 1
    return clock


def validate_trace(events: Sequence[TraceEvent]) -> None:
    """Raise a :class:`TraceError` unless ``events`` is a well-formed trace."""
    prev = None
    for i, ev in enumerate(events):
        for name in ("arrival", "client", "video", "patience"):
            value = getattr(ev, name)
            if not value >= 0:  # also rejects NaN
                raise NegativeField(i, name)
        if prev is not None and ev.arrival < prev:
            raise NonMonotonicTime(i)
        prev = ev.arrival


class OutcomeKind(enum.Enum):
    HIT_L1 = "HitL1"
    HIT_L2 = "HitL2"
    GHOST_HIT_B1 = "GhostHitB1"
    GHOST_HIT_B2 = "GhostHitB2"
    MISS = "Miss"
    # single-list baseline policies have no L1/L2 distinction
    HIT = "Hit"

    @property
    def is_hit(self) -> bool:
        return self in _HIT_KINDS


_HIT_KINDS = frozenset({OutcomeKind.HIT_L1, OutcomeKind.HIT_L2, OutcomeKind.HIT})


@dataclass(frozen=True, slots=True)
class Outcome:
    kind: OutcomeKind
    evicted: Optional[VideoId] = None
    ghost_trimmed: Optional[VideoId] = None
    joined_group: Optional[int] = None

    @property
    def is_hit(self) -> bool:
        k = self.kind
        return k is OutcomeKind.HIT_L2 or k is OutcomeKind.HIT or k is OutcomeKind.HIT_L1


class ReplacementPolicy:
    """Common surface of every replacement policy driven by the simulator.

    Subclasses implement :meth:`on_request` and keep ``capacity`` pages at
    most in the real cache.
    """

    name = "policy"

    def __init__(self, capacity: int):
        if int(capacity) < 1:
            raise ValueError(f"cache capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)

    def on_request(self, video: VideoId, clock: SimClock, online_hint: bool = True,
                   batch_size: int = 1) -> Outcome:
        raise NotImplementedError

    def resident(self) -> list:
        raise NotImplementedError

    def __contains__(self, video) -> bool:
        return video in self.resident()

    def __len__(self) -> int:
        return len(self.resident())

    def check_invariants(self) -> None:
        if len(self) > self.capacity:
            raise InvariantViolation(
                f"{self.name}: {len(self)} resident pages exceed capacity {self.capacity}"
            )
