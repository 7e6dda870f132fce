"""Classical replacement policies used as comparison points, plus Belady's MIN.

Every policy works on equal-size prefix pages and exposes the same
``on_request(video, clock)`` surface as :class:`~prefixcache.adr.ADRCache`.
"""
from __future__ import annotations

import heapq
import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import (
    InvariantViolation,
    Outcome,
    OutcomeKind,
    ReplacementPolicy,
    SimulationError,
    TraceEvent,
    VideoId,
)

_HIT = Outcome(OutcomeKind.HIT)
_COLD_MISS = Outcome(OutcomeKind.MISS)

POLICY_KINDS = ("LRU", "LFU", "LFU_AGING", "LFUDA", "GDS", "GDS_AGING", "FBR", "RAND", "ADR")

DEFAULT_PARAMS: dict[str, dict] = {
    "LRU": {},
    "LFU": {},
    "LFU_AGING": {"avg_threshold": 5.0},
    "LFUDA": {},
    "GDS": {"cost": 1.0, "size": 1.0},
    "GDS_AGING": {"cost": 1.0, "size": 1.0, "avg_threshold": 5.0},
    "FBR": {"fractions": (0.3, 0.3, 0.4)},
    "RAND": {"seed": 0},
    "ADR": {"ghost_b2_dest": "L1", "aging_factor": 0.9},
}


class WrongKind(SimulationError, TypeError):
    pass


class ZeroSize(SimulationError, ValueError):
    pass


class BadFractions(SimulationError, ValueError):
    pass


class EmptySet(SimulationError, LookupError):
    pass


class PolicyConfigError(SimulationError, ValueError):
    pass


@dataclass(frozen=True)
class PolicyConfig:
    kind: str
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise PolicyConfigError(f"unknown policy kind {self.kind!r}")
        merged = {**DEFAULT_PARAMS[self.kind], **self.params}
        unknown = set(merged) - set(DEFAULT_PARAMS[self.kind])
        if unknown:
            raise PolicyConfigError(f"{self.kind}: unknown parameters {sorted(unknown)}")
        if "fractions" in merged:
            _check_fractions(tuple(merged["fractions"]))
        object.__setattr__(self, "params", merged)

    @property
    def label(self) -> str:
        return self.kind


def make_policy(config: PolicyConfig, capacity: int) -> ReplacementPolicy:
    """Instantiate the policy described by ``config`` with ``capacity`` pages."""
    from .adr import ADRCache

    p = dict(config.params)
    kind = config.kind
    if kind == "ADR":
        return ADRCache(capacity, **p)
    cls = {
        "LRU": LRUPolicy, "LFU": LFUPolicy, "LFU_AGING": LFUAgingPolicy,
        "LFUDA": LFUDAPolicy, "GDS": GDSPolicy, "GDS_AGING": GDSAgingPolicy,
        "FBR": FBRPolicy, "RAND": RandomPolicy,
    }[kind]
    return cls(capacity, **p)


# -- key formulas ---------------------------------------------------------

def lfuda_key(count: float, cache_age: float) -> float:
    return count + cache_age


def gds_key(ref_count: float, cost: float, size: float, inflation_L: float) -> float:
    """Popularity-aware Greedy Dual Size key: ``L + ref_count * cost / size``."""
    if size <= 0:
        raise ZeroSize(f"object size must be positive, got {size}")
    return inflation_L + ref_count * cost / size


def _check_fractions(fractions: Sequence[float]) -> None:
    if len(fractions) != 3 or not all(0.0 < f < 1.0 for f in fractions) \
            or not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise BadFractions(f"FBR fractions must be three values in (0,1) summing to 1: {fractions}")


def fbr_classify(position: int, c: int, fractions: Sequence[float] = (0.3, 0.3, 0.4)) -> str:
    """Section ("NEW", "MIDDLE" or "OLD") of the page ``position`` slots from MRU."""
    _check_fractions(fractions)
    new, middle, _ = fractions
    if position < new * c:
        return "NEW"
    if position >= (new + middle) * c:
        return "OLD"
    return "MIDDLE"


def rand_choice(residents: Sequence[VideoId], rng: np.random.Generator) -> VideoId:
    """Uniform choice among ``residents``.

    Sets are sorted first so a given seed always picks the same element.
    """
    if isinstance(residents, (set, frozenset)):
        residents = sorted(residents)
    if len(residents) == 0:
        raise EmptySet("cannot choose from an empty resident set")
    return residents[int(rng.integers(len(residents)))]


# -- policies -------------------------------------------------------------

class LRUPolicy(ReplacementPolicy):
    name = "LRU"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.order: OrderedDict[VideoId, None] = OrderedDict()  # LRU first

    def resident(self):
        return list(self.order)

    def __contains__(self, video):
        return video in self.order

    def __len__(self):
        return len(self.order)

    def on_request(self, video, clock, online_hint=True, batch_size=1):
        order = self.order
        if video in order:
            order.move_to_end(video)
            return _HIT
        evicted = None
        if len(order) >= self.capacity:
            evicted, _ = order.popitem(last=False)
        order[video] = None
        return Outcome(OutcomeKind.MISS, evicted) if evicted is not None else _COLD_MISS


class _KeyedPolicy(ReplacementPolicy):
    """Evicts the resident page with the smallest key; ties go to the LRU page.

    Keys live in a lazy-deletion heap of ``(key, last_touch, video)`` so both
    hits and evictions are logarithmic.
    """

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.keys: dict[VideoId, float] = {}
        self.touch: dict[VideoId, int] = {}
        self._heap: list = []
        self._tick = itertools.count()

    def resident(self):
        return list(self.keys)

    def __contains__(self, video):
        return video in self.keys

    def __len__(self):
        return len(self.keys)

    def _set_key(self, video, key):
        t = next(self._tick)
        self.keys[video] = key
        self.touch[video] = t
        heapq.heappush(self._heap, (key, t, video))
        if len(self._heap) > 4 * self.capacity + 64:
            self._rebuild_heap()

    def _rebuild_heap(self):
        self._heap = [(k, self.touch[v], v) for v, k in self.keys.items()]
        heapq.heapify(self._heap)

    def _pop_min(self) -> tuple[VideoId, float]:
        heap = self._heap
        while True:
            key, t, video = heapq.heappop(heap)
            if self.touch.get(video) == t:
                del self.keys[video], self.touch[video]
                return video, key

    def min_key(self) -> float:
        heap = self._heap
        while heap and self.touch.get(heap[0][2]) != heap[0][1]:
            heapq.heappop(heap)
        return heap[0][0] if heap else math.inf

    def _hit(self, video) -> None:
        raise NotImplementedError

    def _insert(self, video) -> None:
        raise NotImplementedError

    def _evicted(self, video, key) -> None:
        pass

    def _after_request(self) -> None:
        pass

    def on_request(self, video, clock, online_hint=True, batch_size=1):
        if video in self.keys:
            self._hit(video)
            self._after_request()
            return _HIT
        evicted = None
        if len(self.keys) >= self.capacity:
            evicted, key = self._pop_min()
            self._evicted(evicted, key)
        self._insert(video)
        self._after_request()
        return Outcome(OutcomeKind.MISS, evicted) if evicted is not None else _COLD_MISS


class LFUPolicy(_KeyedPolicy):
    """In-cache LFU: reference counts are dropped when a page leaves."""

    name = "LFU"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.counts: dict[VideoId, float] = {}

    def _hit(self, video):
        self.counts[video] += 1
        self._set_key(video, self.counts[video])

    def _insert(self, video):
        self.counts[video] = 1
        self._set_key(video, 1)

    def _evicted(self, video, key):
        del self.counts[video]


def _halve_counts(counts: dict, avg_threshold: float) -> bool:
    if not counts or sum(counts.values()) / len(counts) <= avg_threshold:
        return False
    for v, n in counts.items():
        counts[v] = max(1, int(n // 2))
    return True


class LFUAgingPolicy(LFUPolicy):
    """LFU whose counts are halved whenever their mean exceeds ``avg_threshold``."""

    name = "LFU_AGING"

    def __init__(self, capacity: int, avg_threshold: float = 5.0):
        super().__init__(capacity)
        self.avg_threshold = avg_threshold
        self._total = 0

    def _hit(self, video):
        super()._hit(video)
        self._total += 1

    def _insert(self, video):
        super()._insert(video)
        self._total += 1

    def _evicted(self, video, key):
        self._total -= self.counts[video]
        super()._evicted(video, key)

    def _after_request(self):
        # running total keeps the mean check O(1) per request
        if self.counts and self._total / len(self.counts) > self.avg_threshold:
            self.lfu_aging_step()

    def lfu_aging_step(self) -> bool:
        """Halve every count when the mean count is above the threshold."""
        aged = _halve_counts(self.counts, self.avg_threshold)
        if aged:
            self._total = sum(self.counts.values())
            for v, n in self.counts.items():
                self.keys[v] = n
            self._rebuild_heap()
        return aged


def lfu_aging_step(policy: ReplacementPolicy) -> dict:
    """Apply one aging step to an LFU-Aging policy and return its counts."""
    if not isinstance(policy, LFUAgingPolicy):
        raise WrongKind(f"aging step needs an LFU_AGING policy, got {policy.name}")
    policy.lfu_aging_step()
    return dict(policy.counts)


class LFUDAPolicy(_KeyedPolicy):
    """LFU with dynamic aging: keys are count plus the running cache age."""

    name = "LFUDA"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.counts: dict[VideoId, float] = {}
        self.cache_age = 0.0

    def _hit(self, video):
        self.counts[video] += 1
        self._set_key(video, lfuda_key(self.counts[video], self.cache_age))

    def _insert(self, video):
        self.counts[video] = 1
        self._set_key(video, lfuda_key(1, self.cache_age))

    def _evicted(self, video, key):
        del self.counts[video]
        self.cache_age = key

    def check_invariants(self):
        super().check_invariants()
        if self.keys and self.cache_age > min(self.keys.values()):
            raise InvariantViolation("LFUDA cache age exceeds the minimum resident key")


class GDSPolicy(_KeyedPolicy):
    """Popularity-aware Greedy Dual Size with inflation value ``L``."""

    name = "GDS"

    def __init__(self, capacity: int, cost: float = 1.0, size: float = 1.0):
        super().__init__(capacity)
        if size <= 0:
            raise ZeroSize(f"object size must be positive, got {size}")
        self.cost = cost
        self.size = size
        self.counts: dict[VideoId, float] = {}
        self.inflation = 0.0

    def _hit(self, video):
        self.counts[video] += 1
        self._set_key(video, gds_key(self.counts[video], self.cost, self.size, self.inflation))

    def _insert(self, video):
        self.counts[video] = 1
        self._set_key(video, gds_key(1, self.cost, self.size, self.inflation))

    def _evicted(self, video, key):
        del self.counts[video]
        self.inflation = key


class GDSAgingPolicy(GDSPolicy):
    """GDS whose reference counts are halved when their mean passes a threshold.

    Resident keys are re-derived from the aged counts against the current
    inflation value, which caps the head start of formerly popular pages.
    """

    name = "GDS_AGING"

    def __init__(self, capacity: int, cost: float = 1.0, size: float = 1.0,
                 avg_threshold: float = 5.0):
        super().__init__(capacity, cost, size)
        self.avg_threshold = avg_threshold

    def _after_request(self):
        if _halve_counts(self.counts, self.avg_threshold):
            for v, n in self.counts.items():
                self.keys[v] = gds_key(n, self.cost, self.size, self.inflation)
            self._rebuild_heap()


class FBRPolicy(ReplacementPolicy):
    """Frequency-based replacement over an LRU stack split into three sections.

    Hits in the new section leave the reference count alone; the victim is
    the lowest-count page of the old section (ties go to the LRU end).
    """

    name = "FBR"

    def __init__(self, capacity: int, fractions: Sequence[float] = (0.3, 0.3, 0.4)):
        super().__init__(capacity)
        _check_fractions(tuple(fractions))
        self.fractions = tuple(fractions)
        self.order: OrderedDict[VideoId, None] = OrderedDict()  # LRU first
        self.counts: dict[VideoId, int] = {}
        labels = [fbr_classify(p, self.capacity, self.fractions) for p in range(self.capacity)]
        self.new_size = labels.count("NEW")
        self.old_start = self.capacity - labels.count("OLD")

    def resident(self):
        return list(self.order)

    def __contains__(self, video):
        return video in self.order

    def __len__(self):
        return len(self.order)

    def sections(self) -> dict[str, list[VideoId]]:
        mru_first = list(reversed(self.order))
        return {
            "NEW": mru_first[: self.new_size],
            "MIDDLE": mru_first[self.new_size: self.old_start],
            "OLD": mru_first[self.old_start:],
        }

    def _position_from_mru(self, video) -> int:
        for i, v in enumerate(reversed(self.order)):
            if v == video:
                return i
        raise KeyError(video)

    def on_request(self, video, clock, online_hint=True, batch_size=1):
        order = self.order
        if video in order:
            if self._position_from_mru(video) >= self.new_size:
                self.counts[video] += 1
            order.move_to_end(video)
            return _HIT
        evicted = None
        if len(order) >= self.capacity:
            evicted = self._victim()
            del order[evicted], self.counts[evicted]
        order[video] = None
        self.counts[video] = 1
        return Outcome(OutcomeKind.MISS, evicted) if evicted is not None else _COLD_MISS

    def _victim(self) -> VideoId:
        old_len = max(1, len(self.order) - self.old_start)
        best = None
        best_count = 0
        for v in itertools.islice(self.order, old_len):  # LRU end first
            n = self.counts[v]
            if best is None or n < best_count:
                best, best_count = v, n
        return best


class RandomPolicy(ReplacementPolicy):
    name = "RAND"

    def __init__(self, capacity: int, seed: int = 0):
        super().__init__(capacity)
        self.rng = np.random.default_rng(seed)
        self.slots: list[VideoId] = []
        self.index: dict[VideoId, int] = {}

    def resident(self):
        return list(self.slots)

    def __contains__(self, video):
        return video in self.index

    def __len__(self):
        return len(self.slots)

    def on_request(self, video, clock, online_hint=True, batch_size=1):
        if video in self.index:
            return _HIT
        if len(self.slots) < self.capacity:
            self.index[video] = len(self.slots)
            self.slots.append(video)
            return _COLD_MISS
        evicted = rand_choice(self.slots, self.rng)
        i = self.index.pop(evicted)
        self.slots[i] = video
        self.index[video] = i
        return Outcome(OutcomeKind.MISS, evicted)


# -- offline oracle -------------------------------------------------------

def belady_min_replay(trace: Sequence, c: int):
    """Replay ``trace`` under Belady's clairvoyant MIN policy.

    ``trace`` holds :class:`TraceEvent` objects or bare video ids.  On a miss
    at capacity the resident video referenced farthest in the future is
    evicted; videos never referenced again go first, smallest id first.
    Returns a :class:`~prefixcache.metrics.MetricsReport`.
    """
    from .metrics import MetricsReport

    if c < 1:
        raise ValueError(f"cache capacity must be >= 1, got {c}")
    videos = [ev.video if isinstance(ev, TraceEvent) else int(ev) for ev in trace]
    n = len(videos)
    next_use = [0] * n
    upcoming: dict[VideoId, int] = {}
    for i in range(n - 1, -1, -1):
        next_use[i] = upcoming.get(videos[i], n)
        upcoming[videos[i]] = i

    report = MetricsReport(policy_name="MIN", cache_size=c)
    resident: dict[VideoId, int] = {}
    # max-heap on next use, smallest id first among ties; lazy deletion
    heap: list = []
    for i, v in enumerate(videos):
        nxt = next_use[i]
        if v in resident:
            outcome = _HIT
        else:
            evicted = None
            if len(resident) >= c:
                while True:
                    neg_next, cand = heapq.heappop(heap)
                    if resident.get(cand) == -neg_next:
                        break
                del resident[cand]
                evicted = cand
            outcome = Outcome(OutcomeKind.MISS, evicted)
        resident[v] = nxt
        heapq.heappush(heap, (-nxt, v))
        report.record_outcome(outcome, 0.0)
    return report
