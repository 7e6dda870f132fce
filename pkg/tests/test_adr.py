import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefixcache.adr import (
    ADRCache,
    EmptyList,
    NotOffline,
    NotResident,
    PrefixPage,
    score,
    select_victim,
)
from prefixcache.core import OutcomeKind, SimClock

from conftest import TABLE_1, l2_rows, pages_at


def tick(clock):
    clock.event_count += 1
    return clock


def test_score_values_from_worked_example():
    clock = SimClock(event_count=20)
    pages = {p.video: p for p in pages_at(TABLE_1, clock)}
    assert score(pages["D"], clock) == pytest.approx(0.2, abs=1e-12)
    assert score(pages["S"], clock) == pytest.approx(13 / 17, abs=1e-12)
    assert score(pages["S"], clock) == pytest.approx(0.7647, abs=1e-4)
    just_used = PrefixPage(1, 7.0, clock.event_count)
    assert score(just_used, clock) == 7.0


def test_select_victim_picks_least_score():
    clock = SimClock(event_count=20)
    assert select_victim(pages_at(TABLE_1, clock), clock).video == "D"


def test_select_victim_single_and_empty():
    clock = SimClock(event_count=5)
    only = PrefixPage(9, 3.0, 2)
    assert select_victim([only], clock) is only
    with pytest.raises(EmptyList):
        ADRCache(3).select_victim(clock)


def test_select_victim_tie_goes_to_older_page():
    clock = SimClock(event_count=100)
    young = PrefixPage(1, 2.0, clock.event_count - 4 + 1)   # 2 / 4
    old = PrefixPage(2, 4.0, clock.event_count - 8 + 1)     # 4 / 8
    assert score(young, clock) == score(old, clock) == 0.5
    assert select_victim([young, old], clock) is old
    assert select_victim([old, young], clock) is old


def test_cold_miss_inserts_into_l1():
    cache, clock = ADRCache(4), SimClock()
    out = cache.on_request(7, tick(clock))
    assert out.kind is OutcomeKind.MISS and out.evicted is None
    assert [p.video for p in cache.l1_order()] == [7]
    assert cache.page(7).frequency == 1


def test_l1_hit_promotes_to_l2():
    cache, clock = ADRCache(4), SimClock()
    cache.on_request(7, tick(clock))
    out = cache.on_request(7, tick(clock))
    assert out.kind is OutcomeKind.HIT_L1 and out.evicted is None
    assert cache.where(7) == "L2"
    assert cache.page(7).frequency == 2
    assert cache.page(7).age(clock) == 1


def test_ghost_hit_in_b1_reinstalls_at_mru_of_l2():
    clock = SimClock(event_count=20)
    cache = ADRCache.load(5, l2=pages_at(TABLE_1, clock), b1=["G"])
    out = cache.on_request("G", tick(clock), batch_size=3)
    assert out.kind is OutcomeKind.GHOST_HIT_B1
    assert out.evicted == "D"
    assert cache.b2_order() == ["D"] and cache.b1_order() == []
    assert l2_rows(cache, clock)[0] == ("G", 1, 3.0)


def test_miss_with_l1_empty_evicts_score_victim_from_l2():
    clock = SimClock(event_count=20)
    cache = ADRCache.load(5, l2=pages_at(TABLE_1, clock))
    out = cache.on_request(9, tick(clock))
    assert out.kind is OutcomeKind.MISS and out.evicted == "D"
    assert [p.video for p in cache.l1_order()] == [9]
    assert cache.b2_order() == ["D"]


def test_miss_with_room_in_l1_budget_evicts_lru_of_l1():
    clock = SimClock(event_count=20)
    l1 = [PrefixPage("x", 1.0, 19), PrefixPage("y", 1.0, 18)]
    cache = ADRCache.load(7, l1=l1, l2=pages_at(TABLE_1, clock))
    out = cache.on_request(9, tick(clock))
    assert out.kind is OutcomeKind.MISS and out.evicted == "y"
    assert [p.video for p in cache.l1_order()] == [9, "x"]
    assert cache.b1_order() == ["y"]
    assert [p.video for p in cache.l2_order()] == ["E", "A", "D", "F", "S"]


def test_ghost_hit_in_b2_goes_to_l1_by_default():
    clock = SimClock(event_count=20)
    cache = ADRCache.load(6, l2=pages_at(TABLE_1, clock), b2=["Q"])
    out = cache.on_request("Q", tick(clock))
    assert out.kind is OutcomeKind.GHOST_HIT_B2 and out.evicted is None
    assert cache.where("Q") == "L1"
    assert cache.page("Q").frequency == 1


def test_ghost_hit_in_b2_destination_switch():
    clock = SimClock(event_count=20)
    cache = ADRCache.load(6, l2=pages_at(TABLE_1, clock), b2=["Q"], ghost_b2_dest="L2")
    cache.on_request("Q", tick(clock))
    assert cache.where("Q") == "L2"
    assert cache.l2_order()[0].video == "Q"


def test_ghost_lists_are_trimmed_to_budget():
    # |L1| + |B1| = 3 = c; the miss evicts L1's LRU into B1, one ghost must go
    clock = SimClock(event_count=10)
    cache = ADRCache.load(3, l1=[PrefixPage(1, 1.0, 10), PrefixPage(2, 1.0, 9)],
                          l2=[PrefixPage(3, 2.0, 8)], b1=[4])
    out = cache.on_request(5, tick(clock))
    assert out.evicted == 2
    assert out.ghost_trimmed == 4
    assert cache.b1_order() == [2]
    cache.check_invariants(clock)


def test_offline_l2_page_is_brought_back_online():
    clock = SimClock(event_count=20)
    cache = ADRCache.load(5, l2=pages_at(TABLE_1, clock))
    cache.set_online("F", False)
    out = cache.on_request("F", tick(clock), online_hint=False)
    assert out.kind is OutcomeKind.HIT_L2
    page = cache.page("F")
    assert page.online and page.age(clock) == 1 and page.frequency == 7
    assert cache.l2_order()[0] is page


def test_set_online_flags_without_moving():
    clock = SimClock(event_count=20)
    cache = ADRCache.load(5, l2=pages_at(TABLE_1, clock))
    before = l2_rows(cache, clock)
    cache.set_online("A", False)
    cache.set_online("A", False)
    assert not cache.page("A").online
    assert l2_rows(cache, clock) == before
    with pytest.raises(NotResident):
        cache.set_online("Z", False)


def test_offline_aging_arithmetic():
    clock = SimClock(event_count=20)
    cache = ADRCache.load(5, l2=pages_at(TABLE_1, clock) + [])
    cache.set_online("S", False)
    assert cache.apply_offline_aging("S") == pytest.approx(11.7, abs=1e-9)
    assert cache.apply_offline_aging("S") == pytest.approx(10.53, abs=1e-9)
    zero = ADRCache.load(2, l2=[PrefixPage(1, 0.0, 20)])
    zero.set_online(1, False)
    assert zero.apply_offline_aging(1) == 0.0


def test_offline_aging_errors():
    clock = SimClock(event_count=20)
    cache = ADRCache.load(5, l2=pages_at(TABLE_1, clock))
    with pytest.raises(NotOffline):
        cache.apply_offline_aging("S")
    with pytest.raises(NotResident):
        cache.apply_offline_aging("nope")


# subnormal frequencies are excluded: x * 0.9 rounds back to x down there
@given(st.one_of(st.just(0.0), st.floats(min_value=1e-300, max_value=1e12)), st.integers(1, 30))
def test_offline_aging_is_monotone(freq, steps):
    cache = ADRCache.load(1, l2=[PrefixPage(0, freq, 0)])
    cache.set_online(0, False)
    prev = freq
    for _ in range(steps):
        cur = cache.apply_offline_aging(0)
        assert cur <= prev
        if prev > 0:
            assert cur < prev
        prev = cur


# -- randomized state machine checks ---------------------------------------

ops = st.lists(
    st.tuples(st.integers(0, 24), st.sampled_from(["req", "req", "req", "off", "age"])),
    max_size=300,
)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), ops, st.sampled_from(["L1", "L2"]))
def test_structural_invariants_hold(c, script, dest):
    cache, clock = ADRCache(c, ghost_b2_dest=dest), SimClock()
    for video, op in script:
        if op == "req":
            out = cache.on_request(video, tick(clock))
            if out.is_hit:
                assert out.evicted is None
            if out.evicted is not None:
                assert cache.where(out.evicted) in ("B1", "B2", None)
        elif video in cache:
            cache.set_online(video, False)
            if op == "age":
                cache.apply_offline_aging(video)
        cache.check_invariants(clock)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.lists(st.integers(0, 20), max_size=300))
def test_lazy_ages_match_eager_bookkeeping(c, videos):
    # eager model: every request ages all pages by one, the requested page restarts at 1
    cache, clock = ADRCache(c), SimClock()
    eager = {}
    for v in videos:
        cache.on_request(v, tick(clock))
        eager = {k: a + 1 for k, a in eager.items()}
        eager[v] = 1
        for page in cache.l1_order() + cache.l2_order():
            assert page.age(clock) == eager[page.video]


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8), st.lists(st.integers(0, 20), min_size=1, max_size=200))
def test_select_victim_matches_brute_force(c, videos):
    cache, clock = ADRCache(c), SimClock()
    for v in videos:
        cache.on_request(v, tick(clock))
        pages = cache.l2_order()
        if not pages:
            continue
        scored = sorted(pages, key=lambda p: (p.frequency / p.age(clock), -p.age(clock)))
        assert cache.select_victim(clock) is scored[0]


def test_determinism_of_outcome_sequences():
    import random

    rnd = random.Random(7)
    videos = [rnd.randrange(40) for _ in range(3000)]

    def run():
        cache, clock = ADRCache(10), SimClock()
        return [cache.on_request(v, tick(clock)) for v in videos]

    assert run() == run()


def test_capacity_must_be_positive():
    with pytest.raises(ValueError):
        ADRCache(0)
    with pytest.raises(ValueError):
        ADRCache(3, ghost_b2_dest="B1")


def test_aged_offline_page_eventually_becomes_victim():
    clock = SimClock(event_count=20)
    cache = ADRCache.load(5, l2=pages_at(TABLE_1, clock))
    cache.set_online("S", False)
    steps = 0
    while cache.select_victim(clock).video != "S":
        cache.apply_offline_aging("S")
        steps += 1
        assert steps < 100
    # 13 * 0.9**k / 17 must fall below D's 2 / 10
    assert steps == math.ceil(math.log((0.2 * 17) / 13) / math.log(0.9))
