import re

import pytest

from prefixcache.adr import ADRCache
from prefixcache.cli import main
from prefixcache.core import InvariantViolation, TraceEvent
from prefixcache.experiment import (
    SEED_ENV_VAR,
    ConfigTypeError,
    ExperimentConfig,
    MissingRequired,
    UnknownKey,
    emit_csv,
    emit_svg,
    parse_config,
    replay,
    run_experiment,
)
from prefixcache.metrics import MetricsReport
from prefixcache.workload import WorkloadConfig, write_trace


def small(**flags):
    base = {"n_requests": 400, "n_videos": 60, "cache_size": "5,10"}
    base.update(flags)
    return parse_config(flags=base, env={})


def test_defaults():
    cfg = parse_config(env={})
    assert cfg.workload == WorkloadConfig()
    assert cfg.cache_sizes == [25, 50, 100]
    assert [p.kind for p in cfg.policies] == ["ADR", "LRU"]
    assert cfg.multicast and cfg.aging_interval == 100


def test_empty_file_gives_defaults(tmp_path):
    f = tmp_path / "empty.cfg"
    f.write_text("# nothing here\n\n")
    assert parse_config(f, env={}) == parse_config(env={})


def test_flag_beats_file(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("cache_size = 50\nzipf_s = 0.7  # skew\n")
    cfg = parse_config(f, {"cache-size": "100"}, env={})
    assert cfg.cache_sizes == [100]
    assert cfg.workload.zipf_s == 0.7


def test_unknown_key(tmp_path):
    f = tmp_path / "b.cfg"
    f.write_text("zipff_s = 0.9\n")
    with pytest.raises(UnknownKey) as info:
        parse_config(f, env={})
    assert info.value.name == "zipff_s"
    with pytest.raises(UnknownKey):
        parse_config(flags={"colour": "red"}, env={})


def test_type_errors_and_missing_values():
    with pytest.raises(ConfigTypeError) as info:
        parse_config(flags={"n_videos": "many"}, env={})
    assert info.value.key == "n_videos"
    with pytest.raises(ConfigTypeError):
        parse_config(flags={"policies": "ADR,MRU"}, env={})
    with pytest.raises(MissingRequired):
        parse_config(flags={"policies": ""}, env={})


def test_seed_env_override(tmp_path):
    f = tmp_path / "s.cfg"
    f.write_text("seed = 3\n")
    assert parse_config(f, env={SEED_ENV_VAR: "17"}).workload.seed == 17
    assert parse_config(f, {"seed": 5}, env={SEED_ENV_VAR: "17"}).workload.seed == 5


def test_policy_params_reach_policies():
    cfg = small(policies="FBR,ADR,RAND", fbr_fractions="0.2,0.3,0.5", ghost_b2_dest="l2",
                rand_seed=9)
    fbr, adr, rnd = cfg.policies
    assert fbr.params["fractions"] == (0.2, 0.3, 0.5)
    assert adr.params["ghost_b2_dest"] == "L2"
    assert rnd.params["seed"] == 9


def test_empty_trace_run():
    cfg = small(n_requests=0, cache_size="4", policies="ADR")
    (report,) = run_experiment(cfg)
    assert report.requests == 0


def test_policies_share_the_trace():
    reports = run_experiment(small())
    assert len(reports) == 4
    assert {r.requests for r in reports} == {400}


def test_replay_sees_every_event_in_order():
    cfg = small(multicast="true")
    trace = [TraceEvent(float(i), i, i % 7, 5.0) for i in range(50)]
    seen = []
    replay(trace, ADRCache(3), cfg, observer=lambda ev, out, w: seen.append((ev, out)))
    assert [ev for ev, _ in seen] == trace
    assert all(out.joined_group is not None for _, out in seen)


def test_offline_pages_get_aged_in_multicast_runs():
    cfg = small(stream_length="10", patience_s="1", aging_interval="5")
    trace = [TraceEvent(0.0, 0, 1, 1.0), TraceEvent(0.5, 1, 1, 1.0)]
    trace += [TraceEvent(20.0 + i, 2 + i, 2, 1.0) for i in range(5)]
    cache = ADRCache(4)
    replay(trace, cache, cfg)
    page = cache.page(1)
    assert not page.online
    # once on going offline, once more at the 5th event
    assert page.frequency == pytest.approx(2 * 0.9 * 0.9)


def test_invariant_violation_surfaces():
    class Broken(ADRCache):
        def on_request(self, *a, **k):
            out = super().on_request(*a, **k)
            self.b1[object()] = None
            self.b1[object()] = None
            return out

    with pytest.raises(InvariantViolation):
        replay([TraceEvent(0.0, 0, 1, 0.0)], Broken(1), small(multicast="false"))


def test_csv_layout(tmp_path):
    r = MetricsReport(policy_name="LRU", cache_size=10)
    from prefixcache.core import Outcome, OutcomeKind
    for k in [OutcomeKind.HIT] * 2 + [OutcomeKind.MISS] * 3:
        r.record_outcome(Outcome(k), 0.0)
    emit_csv([r], tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == ("policy,cache_size,requests,hits,hit_ratio,replacements,"
                        "distinct_victims,bandwidth_utilization,mean_wait,p95_wait")
    assert len(lines) == 2
    assert lines[1].split(",")[4] == "0.400000"


def test_svg_structure(tmp_path):
    reports = run_experiment(small(cache_size="3,6,9"))
    emit_svg(reports, tmp_path / "h.svg", "hit_ratio")
    text = (tmp_path / "h.svg").read_text()
    polylines = re.findall(r'<polyline[^>]*points="([^"]+)"', text)
    assert len(polylines) == 2
    assert all(len(p.split()) == 3 for p in polylines)
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")


def test_cli_generate_and_oracle(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    assert main(["generate", "--n-requests", "300", "--out", str(out)]) == 0
    assert main(["oracle", "--trace", str(out), "--cache-size", "10"]) == 0
    text = capsys.readouterr().out
    assert "MIN cache_size=10 requests=300" in text


def test_cli_run_writes_outputs(tmp_path, capsys):
    d = tmp_path / "res"
    code = main(["run", "--n-requests", "300", "--cache-size", "5,10", "--output-dir", str(d),
                 "--policies", "ADR,LRU,LFU"])
    assert code == 0
    assert (d / "results.csv").read_text().count("\n") == 7
    for name in ("hit_ratio", "replacements", "bandwidth_utilization", "mean_wait"):
        assert (d / f"{name}.svg").exists()


def test_cli_replay_logs_events(capsys):
    assert main(["replay", "--n-requests", "30", "--cache-size", "4", "--policy", "adr",
                 "--limit", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "# ADR cache_size=4"
    assert len([l for l in lines if "video=" in l]) == 5
    assert lines[-1].startswith("ADR cache_size=4 requests=30")


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("zipff_s = 1\n")
    assert main(["run", "--config", str(bad)]) == 1
    assert main(["oracle", "--trace", str(tmp_path / "missing.csv")]) == 2
    broken = tmp_path / "broken.csv"
    broken.write_text("arrival,client,video,patience\n1,2\n")
    assert main(["oracle", "--trace", str(broken)]) == 2
    unsorted = tmp_path / "unsorted.csv"
    write_trace([TraceEvent(5.0, 0, 1, 1.0), TraceEvent(1.0, 1, 1, 1.0)], unsorted)
    assert main(["oracle", "--trace", str(unsorted)]) == 2


def test_cli_exit_code_for_invariant_violation(monkeypatch, tmp_path):
    from prefixcache import adr

    def broken_trim(self):
        self.b2[object()] = None
        self.b2[object()] = None
        self.b2[object()] = None
        return None

    monkeypatch.setattr(adr.ADRCache, "_trim_ghosts", broken_trim)
    code = main(["run", "--n-requests", "50", "--cache-size", "1", "--policies", "ADR",
                 "--output-dir", str(tmp_path)])
    assert code == 3


def test_experiment_config_validation():
    with pytest.raises(MissingRequired):
        ExperimentConfig(policies=[])
    with pytest.raises(MissingRequired):
        ExperimentConfig(cache_sizes=[])
