"""Experiment configuration, the per-run event loop and result emission."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence
from xml.sax.saxutils import escape

from .adr import ADRCache
from .baselines import POLICY_KINDS, PolicyConfig, make_policy
from .core import (
    Outcome,
    ReplacementPolicy,
    SimClock,
    SimulationError,
    TraceEvent,
    advance,
    validate_trace,
)
from .metrics import EmptyReport, MetricsReport, finalize
from .multicast import EngineConfig, MulticastEngine, waiting_time
from .workload import WorkloadConfig, generate_trace, read_trace

SEED_ENV_VAR = "PREFIXCACHE_SEED"


class ConfigError(SimulationError, ValueError):
    pass


class UnknownKey(ConfigError):
    def __init__(self, name: str):
        super().__init__(f"unknown configuration key {name!r}")
        self.name = name


class MissingRequired(ConfigError):
    def __init__(self, name: str):
        super().__init__(f"configuration key {name!r} needs a value")
        self.name = name


class ConfigTypeError(ConfigError, TypeError):
    def __init__(self, key: str, value: str, expected: str):
        super().__init__(f"{key}: cannot read {value!r} as {expected}")
        self.key = key


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _name_list(text: str) -> list[str]:
    return [x.strip().upper() for x in text.split(",") if x.strip()]


def _text(text: str) -> str:
    return text.strip()


# key -> (parser, type name, default as written in a config file)
CONFIG_KEYS: dict[str, tuple[Callable, str, str]] = {
    "trace": (_text, "path", ""),
    "n_videos": (int, "integer", "500"),
    "zipf_s": (float, "real", "0.9"),
    "arrival_rate": (float, "real", "1.0"),
    "n_requests": (int, "integer", "20000"),
    "patience_s": (float, "real", "30.0"),
    "seed": (int, "integer", "42"),
    "cache_size": (_int_list, "integer list", "25,50,100"),
    "policies": (_name_list, "policy list", "ADR,LRU"),
    "multicast": (_bool, "boolean", "true"),
    "stream_length": (float, "real", "7200"),
    "prefix_length": (float, "real", "300"),
    "server_fetch_delay": (float, "real", "2.0"),
    "byte_rate": (float, "real", "187500"),
    "aging_interval": (int, "integer", "100"),
    "aging_factor": (float, "real", "0.9"),
    "ghost_b2_dest": (lambda t: t.strip().upper(), "L1 or L2", "L1"),
    "fbr_fractions": (_float_list, "real list", "0.3,0.3,0.4"),
    "lfu_avg_threshold": (float, "real", "5.0"),
    "gds_cost": (float, "real", "1.0"),
    "rand_seed": (int, "integer", "0"),
    "check_invariants": (_bool, "boolean", "true"),
    "svg_metric": (_text, "metric name", "hit_ratio"),
    "output_dir": (_text, "path", "results"),
}

SVG_METRICS = ("hit_ratio", "replacements", "bandwidth_utilization", "mean_wait", "p95_wait")


@dataclass
class ExperimentConfig:
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    trace_path: Optional[str] = None
    cache_sizes: list = field(default_factory=lambda: [25, 50, 100])
    policies: list = field(default_factory=lambda: [PolicyConfig("ADR"), PolicyConfig("LRU")])
    multicast: bool = True
    engine: EngineConfig = field(default_factory=EngineConfig)
    byte_rate: float = 187_500.0
    aging_interval: int = 100
    check_invariants: bool = True
    svg_metric: str = "hit_ratio"
    output_dir: str = "results"

    def __post_init__(self):
        if not self.policies:
            raise MissingRequired("policies")
        if not self.cache_sizes:
            raise MissingRequired("cache_size")
        if any(c < 1 for c in self.cache_sizes):
            raise ConfigError("every cache_size must be >= 1")
        if self.aging_interval < 1:
            raise ConfigError("aging_interval must be >= 1")
        if self.svg_metric not in SVG_METRICS:
            raise ConfigError(f"svg_metric must be one of {SVG_METRICS}")

    @property
    def prefix_bytes(self) -> int:
        return int(round(self.engine.prefix_length * self.byte_rate))


def read_config_file(path) -> dict[str, str]:
    """Raw ``key = value`` pairs of a config file; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise UnknownKey(key)
            values[key] = value
    return values


def parse_config(path=None, flags: Optional[Mapping[str, object]] = None,
                 env: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Merge built-in defaults, a config file, the seed env var and flags.

    Later sources win: default < file < ``PREFIXCACHE_SEED`` < flag.  Flag
    names may use dashes; values of ``None`` are treated as unset.
    """
    env = os.environ if env is None else env
    raw = {key: spec[2] for key, spec in CONFIG_KEYS.items()}
    if path is not None:
        raw.update(read_config_file(path))
    if env.get(SEED_ENV_VAR):
        raw["seed"] = env[SEED_ENV_VAR]
    for name, value in (flags or {}).items():
        if value is None:
            continue
        key = name.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise UnknownKey(key)
        raw[key] = value if isinstance(value, str) else _unparse(value)

    v = {}
    for key, (parser, type_name, _) in CONFIG_KEYS.items():
        try:
            v[key] = parser(raw[key])
        except ValueError:
            raise ConfigTypeError(key, raw[key], type_name) from None

    for kind in v["policies"]:
        if kind not in POLICY_KINDS:
            raise ConfigTypeError("policies", kind, "policy list")
    try:
        workload = WorkloadConfig(v["n_videos"], v["zipf_s"], v["arrival_rate"],
                                  v["n_requests"], v["patience_s"], v["seed"])
        engine = EngineConfig(v["stream_length"], v["prefix_length"], v["server_fetch_delay"])
        policies = [PolicyConfig(kind, _policy_params(kind, v)) for kind in v["policies"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(
        workload=workload,
        trace_path=v["trace"] or None,
        cache_sizes=v["cache_size"],
        policies=policies,
        multicast=v["multicast"],
        engine=engine,
        byte_rate=v["byte_rate"],
        aging_interval=v["aging_interval"],
        check_invariants=v["check_invariants"],
        svg_metric=v["svg_metric"],
        output_dir=v["output_dir"],
    )


def _unparse(value) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(str(x) for x in value)
    return str(value)


def _policy_params(kind: str, v: dict) -> dict:
    if kind == "ADR":
        return {"ghost_b2_dest": v["ghost_b2_dest"], "aging_factor": v["aging_factor"]}
    if kind == "FBR":
        return {"fractions": tuple(v["fbr_fractions"])}
    if kind == "LFU_AGING":
        return {"avg_threshold": v["lfu_avg_threshold"]}
    if kind == "GDS":
        return {"cost": v["gds_cost"]}
    if kind == "GDS_AGING":
        return {"cost": v["gds_cost"], "avg_threshold": v["lfu_avg_threshold"]}
    if kind == "RAND":
        return {"seed": v["rand_seed"]}
    return {}


def load_trace(config: ExperimentConfig) -> list[TraceEvent]:
    if config.trace_path:
        events = read_trace(config.trace_path)
        validate_trace(events)
        return events
    return generate_trace(config.workload)


def replay(trace: Sequence[TraceEvent], policy: ReplacementPolicy, config: ExperimentConfig,
           observer: Optional[Callable[[TraceEvent, Outcome, float], None]] = None,
           policy_config: Optional[PolicyConfig] = None) -> MetricsReport:
    """Run one policy over ``trace`` and collect its metrics.

    Per event: advance the clock, expire multicast groups, admit the request
    to a group, let the policy serve it, and record the outcome.  ADR pages
    that went offline are aged on the transition and again every
    ``aging_interval`` events while they stay offline.
    """
    report = MetricsReport(policy_name=policy.name, cache_size=policy.capacity,
                           policy=policy_config, prefix_bytes=config.prefix_bytes)
    clock = SimClock()
    engine = MulticastEngine(config.engine) if config.multicast else None
    adr = policy if isinstance(policy, ADRCache) else None
    interval = config.aging_interval
    check = config.check_invariants
    for ev in trace:
        advance(clock, ev)
        if engine is not None:
            for video, transition in engine.expire_groups(clock, cache=adr):
                if transition == "Offline" and adr is not None and video in adr:
                    adr.apply_offline_aging(video)
            online = engine.is_online(ev.video)
            gid, joined = engine.admit_request(ev, clock)
            outcome = policy.on_request(ev.video, clock, online_hint=online)
            wait = engine.serve(gid, outcome, joined, clock)
            outcome = Outcome(outcome.kind, outcome.evicted, outcome.ghost_trimmed, gid)
            if adr is not None and clock.event_count % interval == 0:
                for page in adr.offline_pages():
                    adr.apply_offline_aging(page.video)
        else:
            outcome = policy.on_request(ev.video, clock)
            wait = waiting_time(outcome, False, config.engine)
        if check:
            policy.check_invariants()
        report.record_outcome(outcome, wait)
        if observer is not None:
            observer(ev, outcome, wait)
    return report


def run_experiment(config: ExperimentConfig,
                   trace: Optional[Sequence[TraceEvent]] = None) -> list[MetricsReport]:
    """Replay every (policy, cache size) pair over one shared trace."""
    if trace is None:
        trace = load_trace(config)
    reports = []
    for pc in config.policies:
        for c in config.cache_sizes:
            reports.append(replay(trace, make_policy(pc, c), config, policy_config=pc))
    return reports


# -- output ---------------------------------------------------------------

CSV_COLUMNS = ("policy", "cache_size", "requests", "hits", "hit_ratio", "replacements",
               "distinct_victims", "bandwidth_utilization", "mean_wait", "p95_wait")


def _row(report: MetricsReport) -> dict:
    try:
        s = finalize(report)
        hr, bw, mw, pw = s.hit_ratio, s.bandwidth_utilization, s.mean_wait, s.p95_wait
    except EmptyReport:
        hr = bw = mw = pw = 0.0
    return {
        "policy": report.policy_name, "cache_size": report.cache_size,
        "requests": report.requests, "hits": report.hits, "hit_ratio": hr,
        "replacements": report.replacements, "distinct_victims": report.distinct_victims,
        "bandwidth_utilization": bw, "mean_wait": mw, "p95_wait": pw,
    }


def emit_csv(reports: Sequence[MetricsReport], path) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for report in reports:
        row = _row(report)
        lines.append(",".join(
            f"{row[col]:.6f}" if isinstance(row[col], float) else str(row[col])
            for col in CSV_COLUMNS
        ))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def emit_svg(reports: Sequence[MetricsReport], path, metric: str = "hit_ratio",
             width: int = 640, height: int = 400) -> None:
    """Line chart of ``metric`` against cache size, one polyline per policy."""
    if metric not in SVG_METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    series: dict[str, list] = {}
    for report in reports:
        series.setdefault(report.policy_name, []).append(
            (report.cache_size, float(_row(report)[metric])))
    if not series:
        raise ValueError("no series to plot")
    for pts in series.values():
        pts.sort()
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = 0.0, max(ys) if max(ys) > 0 else 1.0
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    left, right, top, bottom = 60, 130, 20, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="12">cache size (prefixes)</text>',
        f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(metric)}</text>',
    ]
    for x in sorted(set(xs)):
        out.append(f'<text x="{sx(x):.1f}" y="{top + ph + 16}" text-anchor="middle" '
                   f'font-size="10">{x}</text>')
    for i in range(5):
        y = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{left - 6}" y="{sy(y) + 3:.1f}" text-anchor="end" '
                   f'font-size="10">{_tick(y)}</text>')
    for i, (name, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                   f'points="{coords}"><title>{escape(name)}</title></polyline>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly + 4}" font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def _tick(y: float) -> str:
    return f"{y:.3g}"


def write_results(reports: Sequence[MetricsReport], output_dir, metric: str = "hit_ratio") -> list:
    """Write ``results.csv`` plus one SVG per figure metric into ``output_dir``."""
    os.makedirs(output_dir, exist_ok=True)
    paths = [os.path.join(output_dir, "results.csv")]
    emit_csv(reports, paths[0])
    metrics = [metric] + [m for m in ("hit_ratio", "replacements", "bandwidth_utilization",
                                      "mean_wait") if m != metric]
    for m in metrics:
        p = os.path.join(output_dir, f"{m}.svg")
        emit_svg(reports, p, m)
        paths.append(p)
    return paths
