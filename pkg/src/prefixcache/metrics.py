"""Per-run counters and the summary quantities compared across policies."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Outcome, OutcomeKind, SimulationError

# one prefix: 300 s at an MPEG-1 rate of 1.5 Mbit/s
DEFAULT_PREFIX_BYTES = 300 * 1_500_000 // 8


class EmptyReport(SimulationError, ValueError):
    pass


@dataclass
class MetricsReport:
    """Counters accumulated while one policy replays one trace."""

    policy_name: str = ""
    cache_size: int = 0
    policy: Optional[object] = None
    prefix_bytes: int = DEFAULT_PREFIX_BYTES
    requests: int = 0
    hits: int = 0
    misses: int = 0
    ghost_hits_b1: int = 0
    ghost_hits_b2: int = 0
    replacements: int = 0
    prefix_bytes_from_cache: int = 0
    prefix_bytes_total: int = 0
    waits: list = field(default_factory=list)
    victims: set = field(default_factory=set)

    def record_outcome(self, outcome: Outcome, wait: float = 0.0) -> "MetricsReport":
        self.requests += 1
        self.prefix_bytes_total += self.prefix_bytes
        if outcome.is_hit:
            self.hits += 1
            self.prefix_bytes_from_cache += self.prefix_bytes
        else:
            # ghost hits refetch the data, so they count as misses too
            self.misses += 1
            if outcome.kind is OutcomeKind.GHOST_HIT_B1:
                self.ghost_hits_b1 += 1
            elif outcome.kind is OutcomeKind.GHOST_HIT_B2:
                self.ghost_hits_b2 += 1
        if outcome.evicted is not None:
            self.replacements += 1
            self.victims.add(outcome.evicted)
        self.waits.append(wait)
        return self

    @property
    def distinct_victims(self) -> int:
        return len(self.victims)

    @property
    def hit_ratio(self) -> float:
        return self.hits / self.requests if self.requests else 0.0


def record_outcome(report: MetricsReport, outcome: Outcome, wait: float = 0.0) -> MetricsReport:
    return report.record_outcome(outcome, wait)


@dataclass(frozen=True)
class Summary:
    hit_ratio: float
    replacement_count: int
    distinct_victims: int
    bandwidth_utilization: float
    mean_wait: float
    p95_wait: float


def finalize(report: MetricsReport) -> Summary:
    """Reduce a report to the compared quantities; does not modify it."""
    if report.requests < 1:
        raise EmptyReport("no requests were recorded")
    waits = np.asarray(report.waits, dtype=float)
    return Summary(
        hit_ratio=report.hits / report.requests,
        replacement_count=report.replacements,
        distinct_victims=report.distinct_victims,
        bandwidth_utilization=(report.prefix_bytes_from_cache / report.prefix_bytes_total
                               if report.prefix_bytes_total else 0.0),
        mean_wait=float(waits.mean()) if waits.size else 0.0,
        p95_wait=float(np.percentile(waits, 95)) if waits.size else 0.0,
    )
