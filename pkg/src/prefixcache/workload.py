"""Synthetic request traces: Zipf video popularity and Poisson arrivals."""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SimulationError, TraceEvent

TRACE_HEADER = "arrival,client,video,patience"


class BadParams(SimulationError, ValueError):
    pass


class TraceParseError(SimulationError, ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


@dataclass(frozen=True)
class WorkloadConfig:
    n_videos: int = 500
    zipf_s: float = 0.9
    arrival_rate: float = 1.0
    n_requests: int = 20_000
    patience_s: float = 30.0
    seed: int = 42

    def __post_init__(self):
        if self.n_videos < 1:
            raise BadParams("n_videos must be positive")
        if not self.zipf_s > 0:
            raise BadParams("zipf_s must be positive")
        if not self.arrival_rate > 0:
            raise BadParams("arrival_rate must be positive")
        if self.n_requests < 0:
            raise BadParams("n_requests must be non-negative")
        if not self.patience_s >= 0:
            raise BadParams("patience_s must be non-negative")


def zipf_pmf(n: int, s: float) -> np.ndarray:
    """P(rank = k) for k = 1..n, proportional to ``k**-s``."""
    if n < 1 or not s > 0:
        raise BadParams(f"Zipf needs n >= 1 and s > 0, got n={n}, s={s}")
    w = np.arange(1, n + 1, dtype=float) ** -s
    return w / w.sum()


def zipf_cdf(n: int, s: float) -> np.ndarray:
    cdf = np.cumsum(zipf_pmf(n, s))
    cdf[-1] = 1.0
    return cdf


def zipf_sample(n: int, s: float, u) -> int:
    """Smallest rank ``r`` in ``1..n`` whose CDF exceeds ``u`` (``0 <= u < 1``).

    ``u`` may also be an array, in which case an array of ranks is returned.
    """
    cdf = zipf_cdf(n, s)
    ranks = np.minimum(np.searchsorted(cdf, u, side="right"), n - 1) + 1
    return int(ranks) if np.ndim(ranks) == 0 else ranks


def generate_trace(config: WorkloadConfig) -> list[TraceEvent]:
    """Poisson arrivals at ``arrival_rate``; video ``rank - 1`` for a Zipf rank."""
    n = config.n_requests
    if n == 0:
        return []
    rng = np.random.default_rng(config.seed)
    arrivals = np.cumsum(rng.exponential(1.0 / config.arrival_rate, size=n))
    videos = zipf_sample(config.n_videos, config.zipf_s, rng.random(n)) - 1
    patience = float(config.patience_s)
    return [TraceEvent(float(t), i, int(v), patience)
            for i, (t, v) in enumerate(zip(arrivals.tolist(), videos.tolist()))]


def format_seconds(x: float) -> str:
    """Shortest round-tripping decimal form of ``x`` without an exponent."""
    return np.format_float_positional(float(x), unique=True, trim="0")


def write_trace(events: Sequence[TraceEvent], path) -> None:
    lines = [TRACE_HEADER]
    lines.extend(
        f"{format_seconds(ev.arrival)},{ev.client},{ev.video},{format_seconds(ev.patience)}"
        for ev in events
    )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path) -> list[TraceEvent]:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    events = []
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line_no == 1:
                if line != TRACE_HEADER:
                    raise TraceParseError(1, f"expected header {TRACE_HEADER!r}")
                continue
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 4:
                raise TraceParseError(line_no, f"field count: expected 4, got {len(fields)}")
            try:
                events.append(TraceEvent(float(fields[0]), int(fields[1]),
                                         int(fields[2]), float(fields[3])))
            except ValueError as exc:
                raise TraceParseError(line_no, str(exc)) from None
    return events
