"""Simulation toolkit for video prefix caches.

The centrepiece is :class:`ADRCache`, an adaptive replacement policy that
balances recency and multicast popularity.  Classical policies, Belady's
MIN oracle, a multicast batching engine, a Zipf workload generator and an
experiment runner sit alongside it.
"""
from .adr import ADRCache, PrefixPage, score, select_victim
from .baselines import (
    FBRPolicy,
    GDSAgingPolicy,
    GDSPolicy,
    LFUAgingPolicy,
    LFUDAPolicy,
    LFUPolicy,
    LRUPolicy,
    PolicyConfig,
    RandomPolicy,
    belady_min_replay,
    make_policy,
)
from .core import Outcome, OutcomeKind, SimClock, TraceEvent, advance, validate_trace
from .experiment import ExperimentConfig, parse_config, replay, run_experiment
from .metrics import MetricsReport, finalize
from .multicast import EngineConfig, MulticastEngine, waiting_time
from .workload import WorkloadConfig, generate_trace, read_trace, write_trace

__version__ = "0.1.0"
