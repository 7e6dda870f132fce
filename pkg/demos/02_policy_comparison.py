"""
ADR against the classical policies
==================================

Every policy replays the same Zipf/Poisson trace at three cache sizes.  The
table printed at the end holds the four compared quantities; the SVG charts
land in ``demo_results/``.
"""
from prefixcache import parse_config, run_experiment
from prefixcache.baselines import belady_min_replay
from prefixcache.experiment import load_trace, write_results
from prefixcache.metrics import finalize

config = parse_config(flags={
    "policies": "ADR,LRU,LFU,LFU_AGING,LFUDA,GDS,FBR,RAND",
    "cache_size": "25,50,100",
    "n_requests": 20000,
    "multicast": "true",
    "output_dir": "demo_results",
})
trace = load_trace(config)
reports = run_experiment(config, trace)

print(f"{'policy':<10}{'c':>5}{'hit ratio':>11}{'replaced':>10}{'bandwidth':>11}{'wait (s)':>10}")
for r in reports:
    s = finalize(r)
    print(f"{r.policy_name:<10}{r.cache_size:>5}{s.hit_ratio:>11.4f}{s.replacement_count:>10}"
          f"{s.bandwidth_utilization:>11.4f}{s.mean_wait:>10.4f}")

##############################################################################
# Belady's MIN knows the future and bounds every online policy from above.
for c in config.cache_sizes:
    print(f"MIN c={c}: hit ratio {belady_min_replay(trace, c).hit_ratio:.4f}")

for path in write_results(reports, config.output_dir):
    print("wrote", path)
