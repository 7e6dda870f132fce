"""
Score-based eviction on a small L2 list
=======================================

Five cached prefixes sit in L2 with known recency ages and client counts.
We replay one request for a video tracked in the B1 ghost list, then a hit,
and print the list after each step.
"""
from prefixcache import ADRCache, PrefixPage, SimClock
from prefixcache.adr import score

clock = SimClock(event_count=20)
rows = [("E", 1, 2), ("A", 3, 4), ("D", 10, 2), ("F", 15, 6), ("S", 17, 13)]
l2 = [PrefixPage(v, float(f), clock.event_count - age + 1) for v, age, f in rows]
cache = ADRCache.load(5, l2=l2, b1=["G"])


def show(title):
    print(title)
    print("  page   age  freq   score")
    for p in cache.l2_order():
        print(f"  {p.video:>4} {p.age(clock):>5} {p.frequency:>5.1f}  {score(p, clock):.4f}")
    print(f"  B1={cache.b1_order()} B2={cache.b2_order()}\n")


show("initial L2 (MRU first)")

##############################################################################
# D has the smallest frequency/age ratio, so it is the victim when G, which a
# batch of three clients asks for, is reinstalled from the ghost list.
clock.event_count += 1
print(cache.on_request("G", clock, batch_size=3))
show("after the request for G")

##############################################################################
# A hit moves A to the MRU end; every other page ages by one request.
clock.event_count += 1
print(cache.on_request("A", clock))
show("after a hit on A")

##############################################################################
# When S's multicast stream finishes it goes offline and its frequency decays
# by 10 % per aging step, until it is cheaper to evict than anything else.
cache.set_online("S", False)
steps = 0
while cache.select_victim(clock).video != "S":
    cache.apply_offline_aging("S")
    steps += 1
print(f"S becomes the victim after {steps} aging steps "
      f"(frequency now {cache.page('S').frequency:.3f})")
