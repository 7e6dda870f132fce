"""Adaptive Dynamic Replacement (ADR) for a prefix cache.

Two real LRU lists hold cached prefixes: ``l1`` for pages requested once
recently, ``l2`` for pages requested at least twice.  Two ghost lists keep
the identities of pages recently evicted from them (``b1`` from ``l1``,
``b2`` from ``l2``).  Together the four lists never track more than ``2c``
videos.

Victims in ``l2`` are picked by the smallest ``frequency / age`` score, where
age counts processed requests since the page was last touched (the page
touched by the current request has age 1).  Pages whose multicast stream has
finished are *offline*; their frequency is shrunk by an aging factor so that
formerly popular but now idle prefixes drift towards eviction.

All lists are ``OrderedDict`` objects stored LRU-first; the ``*_order``
accessors return them MRU-first.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import (
    InvariantViolation,
    Outcome,
    OutcomeKind,
    ReplacementPolicy,
    SimClock,
    SimulationError,
    VideoId,
)

DEFAULT_AGING_FACTOR = 0.9


class EmptyList(SimulationError, LookupError):
    pass


class NotResident(SimulationError, KeyError):
    pass


class NotOffline(SimulationError, ValueError):
    pass


@dataclass(slots=True)
class PrefixPage:
    video: VideoId
    frequency: float
    last_access_event: int
    online: bool = True
    group: Optional[int] = None

    def age(self, clock: SimClock) -> int:
        return clock.event_count - self.last_access_event + 1


def score(page: PrefixPage, clock: SimClock) -> float:
    """Frequency divided by recency age; lower means a better victim."""
    return page.frequency / (clock.event_count - page.last_access_event + 1)


def select_victim(pages: Iterable[PrefixPage], clock: SimClock) -> PrefixPage:
    """Return the page with the least score.

    Ties go to the older page.  ``pages`` is any iterable of L2 pages; the
    order of iteration does not matter.
    """
    now = clock.event_count + 1
    best = None
    best_score = best_age = 0.0
    for page in pages:
        age = now - page.last_access_event
        s = page.frequency / age
        if best is None or s < best_score or (s == best_score and age > best_age):
            best, best_score, best_age = page, s, age
    if best is None:
        raise EmptyList("L2 is empty, no victim to select")
    return best


class ADRCache(ReplacementPolicy):
    """Prefix cache of ``capacity`` pages managed by adaptive dynamic replacement.

    Parameters
    ----------
    capacity : int
        Number of prefix pages the real cache holds (``c``).
    ghost_b2_dest : {"L1", "L2"}
        List that receives a page reinstalled after a hit in ``b2``.
    aging_factor : float
        Multiplier applied to an offline page's frequency per aging step.
    """

    name = "ADR"

    def __init__(self, capacity: int, ghost_b2_dest: str = "L1",
                 aging_factor: float = DEFAULT_AGING_FACTOR):
        super().__init__(capacity)
        if ghost_b2_dest not in ("L1", "L2"):
            raise ValueError(f"ghost_b2_dest must be 'L1' or 'L2', got {ghost_b2_dest!r}")
        if not 0.0 < aging_factor < 1.0:
            raise ValueError(f"aging_factor must lie in (0, 1), got {aging_factor}")
        self.ghost_b2_dest = ghost_b2_dest
        self.aging_factor = aging_factor
        self.l1: OrderedDict[VideoId, PrefixPage] = OrderedDict()
        self.l2: OrderedDict[VideoId, PrefixPage] = OrderedDict()
        self.b1: OrderedDict[VideoId, None] = OrderedDict()
        self.b2: OrderedDict[VideoId, None] = OrderedDict()

    @classmethod
    def load(cls, capacity: int, l1: Iterable[PrefixPage] = (), l2: Iterable[PrefixPage] = (),
             b1: Iterable[VideoId] = (), b2: Iterable[VideoId] = (), **kwargs) -> "ADRCache":
        """Build a cache from explicit list contents, each given MRU-first."""
        cache = cls(capacity, **kwargs)
        for target, items in ((cache.l1, l1), (cache.l2, l2)):
            for page in reversed(list(items)):
                target[page.video] = page
        for target, ids in ((cache.b1, b1), (cache.b2, b2)):
            for vid in reversed(list(ids)):
                target[vid] = None
        return cache

    # -- inspection -------------------------------------------------------

    def l1_order(self) -> list[PrefixPage]:
        return list(reversed(self.l1.values()))

    def l2_order(self) -> list[PrefixPage]:
        return list(reversed(self.l2.values()))

    def b1_order(self) -> list[VideoId]:
        return list(reversed(self.b1))

    def b2_order(self) -> list[VideoId]:
        return list(reversed(self.b2))

    def resident(self) -> list[VideoId]:
        return [*self.l1, *self.l2]

    def page(self, video: VideoId) -> PrefixPage:
        page = self.l1.get(video)
        if page is None:
            page = self.l2.get(video)
        if page is None:
            raise NotResident(video)
        return page

    def __contains__(self, video) -> bool:
        return video in self.l1 or video in self.l2

    def __len__(self) -> int:
        return len(self.l1) + len(self.l2)

    def where(self, video: VideoId) -> Optional[str]:
        for label, lst in (("L1", self.l1), ("L2", self.l2), ("B1", self.b1), ("B2", self.b2)):
            if video in lst:
                return label
        return None

    # -- policy -----------------------------------------------------------

    def select_victim(self, clock: SimClock) -> PrefixPage:
        return select_victim(self.l2.values(), clock)

    def on_request(self, video: VideoId, clock: SimClock, online_hint: bool = True,
                   batch_size: int = 1) -> Outcome:
        """Serve one request for ``video``; ``clock`` must already be advanced.

        ``batch_size`` is the initial frequency given to a freshly installed
        page.  ``online_hint`` tells whether the video's multicast group was
        still accepting members; a resident page is put back online by any
        request, so the hint only matters to callers inspecting it.
        """
        now = clock.event_count
        l2 = self.l2
        page = l2.get(video)
        if page is not None:
            # online hit, or an offline page being brought back online
            page.frequency += 1
            page.last_access_event = now
            page.online = True
            l2.move_to_end(video)
            return Outcome(OutcomeKind.HIT_L2)

        page = self.l1.pop(video, None)
        if page is not None:
            page.frequency += 1
            page.last_access_event = now
            page.online = True
            l2[video] = page
            return Outcome(OutcomeKind.HIT_L1)

        fresh = PrefixPage(video, float(batch_size), now)
        if video in self.b1:
            del self.b1[video]
            evicted = self._make_room(clock)
            l2[video] = fresh
            kind = OutcomeKind.GHOST_HIT_B1
        elif video in self.b2:
            del self.b2[video]
            evicted = self._make_room(clock)
            (self.l1 if self.ghost_b2_dest == "L1" else l2)[video] = fresh
            kind = OutcomeKind.GHOST_HIT_B2
        else:
            evicted = self._make_room(clock)
            self.l1[video] = fresh
            kind = OutcomeKind.MISS
        return Outcome(kind, evicted, self._trim_ghosts())

    def _make_room(self, clock: SimClock) -> Optional[VideoId]:
        l1 = self.l1
        if len(l1) + len(self.l2) < self.capacity:
            return None
        if l1 and (len(l1) + len(self.b1) <= self.capacity or not self.l2):
            vid, _ = l1.popitem(last=False)
            self.b1[vid] = None
            return vid
        victim = select_victim(self.l2.values(), clock).video
        del self.l2[victim]
        self.b2[victim] = None
        return victim

    def _trim_ghosts(self) -> Optional[VideoId]:
        c = self.capacity
        trimmed = None
        b1, b2 = self.b1, self.b2
        while b1 and len(self.l1) + len(b1) > c:
            trimmed, _ = b1.popitem(last=False)
        while len(self.l1) + len(self.l2) + len(b1) + len(b2) > 2 * c:
            trimmed, _ = (b2 if b2 else b1).popitem(last=False)
        return trimmed

    # -- online / offline -------------------------------------------------

    def set_online(self, video: VideoId, online: bool) -> None:
        self.page(video).online = bool(online)

    def apply_offline_aging(self, video: VideoId) -> float:
        """Shrink an offline page's frequency by the aging factor; return it."""
        page = self.page(video)
        if page.online:
            raise NotOffline(video)
        page.frequency *= self.aging_factor
        return page.frequency

    def offline_pages(self) -> list[PrefixPage]:
        return [p for lst in (self.l1, self.l2) for p in lst.values() if not p.online]

    # -- checking ---------------------------------------------------------

    def check_invariants(self, clock: Optional[SimClock] = None) -> None:
        c = self.capacity
        n1, n2, g1, g2 = len(self.l1), len(self.l2), len(self.b1), len(self.b2)
        if n1 + n2 > c:
            raise InvariantViolation(f"|L1|+|L2| = {n1 + n2} > c = {c}")
        if n1 + g1 > c:
            raise InvariantViolation(f"|L1|+|B1| = {n1 + g1} > c = {c}")
        total = n1 + n2 + g1 + g2
        if total > 2 * c:
            raise InvariantViolation(f"four-list total {total} > 2c = {2 * c}")
        if len(self.l1.keys() | self.l2.keys() | self.b1.keys() | self.b2.keys()) != total:
            raise InvariantViolation("a video appears in more than one list")
        if clock is not None:
            for lst in (self.l1, self.l2):
                for page in lst.values():
                    if page.frequency < 0 or page.last_access_event > clock.event_count:
                        raise InvariantViolation(f"page {page.video} has invalid bookkeeping")
