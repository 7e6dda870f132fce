"""Batching of client requests into per-video multicast groups.

A group opens with its first member and accepts joiners until that member's
patience runs out (the group deadline).  It then streams for
``stream_length`` seconds counted from its creation and completes.  A video
whose groups have all completed is offline: nobody is being served from its
cached prefix any more.
"""
from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Optional

from .core import Outcome, SimClock, TraceEvent, VideoId


class GroupState(enum.Enum):
    OPEN = "Open"
    STREAMING = "Streaming"
    COMPLETE = "Complete"


@dataclass
class EngineConfig:
    stream_length: float = 7200.0
    prefix_length: float = 300.0
    server_fetch_delay: float = 2.0

    def __post_init__(self):
        for name in ("stream_length", "prefix_length", "server_fetch_delay"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class MulticastGroup:
    id: int
    video: VideoId
    created_at: float
    deadline: float
    stream_length: float
    members: list = field(default_factory=list)
    state: GroupState = GroupState.OPEN
    # time the prefix is available to members; set when the opener is served
    prefix_ready_at: Optional[float] = None

    @property
    def popularity(self) -> int:
        return len(self.members)


def waiting_time(outcome: Outcome, joined: bool, config: EngineConfig,
                 group: Optional[MulticastGroup] = None, now: Optional[float] = None) -> float:
    """Start-up delay of one request.

    A cached prefix plays at once; otherwise the prefix is fetched from the
    server.  A joiner never waits longer than the remaining fetch time of the
    group it joined.
    """
    wait = 0.0 if outcome.is_hit else config.server_fetch_delay
    if joined and group is not None and group.prefix_ready_at is not None and now is not None:
        wait = min(wait, max(0.0, group.prefix_ready_at - now))
    return wait


class MulticastEngine:
    def __init__(self, config: Optional[EngineConfig] = None):
        self.config = config or EngineConfig()
        self.open_groups: dict[VideoId, MulticastGroup] = {}
        self.groups: dict[int, MulticastGroup] = {}  # groups not yet complete
        self.active: dict[VideoId, int] = {}
        self.group_seq = 0
        self.completed = 0
        self.streams_started = 0
        self._deadlines: list = []
        self._stream_ends: list = []

    def admit_request(self, event: TraceEvent, clock: SimClock) -> tuple[int, bool]:
        """Add the requesting client to an open group or start a new one.

        Returns ``(group_id, joined)``; ``joined`` is false when a new group
        was created.
        """
        now = clock.now
        group = self.open_groups.get(event.video)
        if group is not None and now <= group.deadline:
            group.members.append(event.client)
            return group.id, True
        gid = self.group_seq
        self.group_seq += 1
        group = MulticastGroup(gid, event.video, now, now + event.patience,
                               self.config.stream_length, [event.client])
        if event.video in self.open_groups:
            # the old group is past its deadline but expire_groups has not run yet
            self._start_streaming(self.open_groups[event.video])
        self.open_groups[event.video] = group
        self.groups[gid] = group
        self.active[event.video] = self.active.get(event.video, 0) + 1
        self.streams_started += 1
        heapq.heappush(self._deadlines, (group.deadline, gid))
        return gid, False

    def _start_streaming(self, group: MulticastGroup) -> None:
        group.state = GroupState.STREAMING
        if self.open_groups.get(group.video) is group:
            del self.open_groups[group.video]
        heapq.heappush(self._stream_ends, (group.created_at + group.stream_length, group.id))

    def expire_groups(self, clock: SimClock, cache=None) -> list[tuple[VideoId, str]]:
        """Advance group lifecycles to ``clock.now``.

        Returns ``(video, transition)`` pairs where transition is
        ``"Streaming"``, ``"Complete"`` or ``"Offline"``; the last one is
        emitted when a video's final active group completes.  When ``cache``
        is given, the offline video's resident prefix is flagged offline.
        """
        now = clock.now
        out = []
        while self._deadlines and self._deadlines[0][0] < now:
            _, gid = heapq.heappop(self._deadlines)
            group = self.groups.get(gid)
            if group is None or group.state is not GroupState.OPEN:
                continue
            self._start_streaming(group)
            out.append((group.video, "Streaming"))
        while self._stream_ends and self._stream_ends[0][0] <= now:
            _, gid = heapq.heappop(self._stream_ends)
            group = self.groups.pop(gid)
            group.state = GroupState.COMPLETE
            self.completed += 1
            out.append((group.video, "Complete"))
            left = self.active[group.video] - 1
            if left:
                self.active[group.video] = left
                continue
            del self.active[group.video]
            out.append((group.video, "Offline"))
            if cache is not None and group.video in cache:
                cache.set_online(group.video, False)
        return out

    def is_online(self, video: VideoId) -> bool:
        return video in self.active

    def group(self, gid: int) -> Optional[MulticastGroup]:
        return self.groups.get(gid)

    def serve(self, gid: int, outcome: Outcome, joined: bool, clock: SimClock) -> float:
        """Waiting time for the member just admitted to group ``gid``."""
        group = self.groups[gid]
        wait = waiting_time(outcome, joined, self.config, group, clock.now)
        if not joined:
            group.prefix_ready_at = clock.now + wait
        return wait
