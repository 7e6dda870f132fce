from prefixcache.adr import PrefixPage
from prefixcache.core import SimClock

# (video, time stamp, frequency) of the worked example's L2 list, MRU first
TABLE_1 = [("E", 1, 2), ("A", 3, 4), ("D", 10, 2), ("F", 15, 6), ("S", 17, 13)]


def pages_at(rows, clock: SimClock):
    """PrefixPages whose recency ages equal the given time stamps at ``clock``."""
    return [PrefixPage(v, float(f), clock.event_count - ts + 1) for v, ts, f in rows]


def l2_rows(cache, clock):
    return [(p.video, p.age(clock), p.frequency) for p in cache.l2_order()]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
