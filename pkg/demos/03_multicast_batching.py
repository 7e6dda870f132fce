"""
Batching requests into multicast groups
=======================================

Clients asking for the same video within the first client's patience share
one stream.  We count how many streams a trace needs at several patience
values, and how the waiting time of ADR changes once batching is on.
"""
from prefixcache import (
    MulticastEngine,
    SimClock,
    WorkloadConfig,
    advance,
    generate_trace,
    parse_config,
    run_experiment,
)
from prefixcache.metrics import finalize

for patience in (0, 10, 30, 120):
    trace = generate_trace(WorkloadConfig(n_requests=20000, patience_s=patience, seed=1))
    engine, clock = MulticastEngine(), SimClock()
    for ev in trace:
        advance(clock, ev)
        engine.expire_groups(clock)
        engine.admit_request(ev, clock)
    print(f"patience {patience:>4} s: {engine.streams_started:>6} streams for {len(trace)} requests")

##############################################################################
# A client that joins a group whose prefix is still being fetched only waits
# for the rest of that fetch, so batching can only shorten start-up delays.
for multicast in ("false", "true"):
    cfg = parse_config(flags={"policies": "ADR", "cache_size": "50", "multicast": multicast,
                              "seed": 1})
    (report,) = run_experiment(cfg)
    s = finalize(report)
    print(f"multicast={multicast:<5} hit ratio {s.hit_ratio:.4f}  mean wait {s.mean_wait:.4f} s")
