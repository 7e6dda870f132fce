"""Command line entry point: ``prefixcache {generate,run,replay,oracle}``.

Exit codes: 0 success, 1 configuration error, 2 I/O or trace-format error,
3 cache invariant violated during a run.
"""
from __future__ import annotations

import argparse
import sys

from .baselines import PolicyConfig, belady_min_replay, make_policy
from .core import InvariantViolation, TraceError
from .experiment import (
    CONFIG_KEYS,
    ConfigError,
    load_trace,
    parse_config,
    replay,
    run_experiment,
    write_results,
)
from .metrics import EmptyReport, finalize
from .workload import BadParams, TraceParseError, generate_trace, write_trace

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    group = p.add_argument_group("configuration keys (override the file)")
    for key, (_, type_name, default) in CONFIG_KEYS.items():
        group.add_argument("--" + key.replace("_", "-"), dest="cfg_" + key, metavar="VALUE",
                           help=f"{type_name} (default: {default or 'unset'})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefixcache",
                                     description="Video prefix cache replacement simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic Zipf/Poisson trace")
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="trace file to write")

    p = sub.add_parser("run", help="compare policies over cache sizes")
    _add_config_flags(p)

    p = sub.add_parser("replay", help="log every event of one policy run")
    _add_config_flags(p)
    p.add_argument("--policy", default="ADR", help="policy kind to replay")
    p.add_argument("--limit", type=int, default=None, help="print at most this many events")

    p = sub.add_parser("oracle", help="Belady MIN hit ratio for a trace")
    _add_config_flags(p)
    return parser


def _config(args):
    flags = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_")}
    return parse_config(args.config, flags)


def _cmd_generate(args, out) -> int:
    config = _config(args)
    events = generate_trace(config.workload)
    write_trace(events, args.out)
    print(f"wrote {len(events)} events to {args.out}", file=out)
    return EXIT_OK


def _cmd_run(args, out) -> int:
    config = _config(args)
    reports = run_experiment(config)
    for path in write_results(reports, config.output_dir, config.svg_metric):
        print(path, file=out)
    return EXIT_OK


def _cmd_replay(args, out) -> int:
    config = _config(args)
    trace = load_trace(config)
    pc = next((p for p in config.policies if p.kind == args.policy.upper()), None)
    if pc is None:
        pc = PolicyConfig(args.policy.upper())
    shown = [0]

    def log(ev, outcome, wait):
        if args.limit is not None and shown[0] >= args.limit:
            return
        shown[0] += 1
        print(f"{ev.arrival:.6f} client={ev.client} video={ev.video} {outcome.kind.value}"
              f" evicted={_opt(outcome.evicted)} trimmed={_opt(outcome.ghost_trimmed)}"
              f" group={_opt(outcome.joined_group)} wait={wait:.6f}", file=out)

    for c in config.cache_sizes:
        print(f"# {pc.kind} cache_size={c}", file=out)
        report = replay(trace, make_policy(pc, c), config, observer=log, policy_config=pc)
        _print_summary(report, out)
    return EXIT_OK


def _cmd_oracle(args, out) -> int:
    config = _config(args)
    trace = load_trace(config)
    for c in config.cache_sizes:
        report = belady_min_replay(trace, c)
        _print_summary(report, out)
    return EXIT_OK


def _opt(x) -> str:
    return "-" if x is None else str(x)


def _print_summary(report, out) -> None:
    try:
        ratio = finalize(report).hit_ratio
    except EmptyReport:
        ratio = 0.0
    print(f"{report.policy_name} cache_size={report.cache_size} requests={report.requests} "
          f"hits={report.hits} hit_ratio={ratio:.6f}", file=out)


_COMMANDS = {"generate": _cmd_generate, "run": _cmd_run, "replay": _cmd_replay,
             "oracle": _cmd_oracle}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args, out)
    except (ConfigError, BadParams) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, TraceParseError, TraceError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
