import os
import subprocess
import sys

import pytest

from aqmsim.cli import main
from aqmsim.config import ScenarioConfig, dumps, get_value, load, loads, parse_number, with_value
from aqmsim.errors import ConfigError
from aqmsim.harness import emit_csv, output_paths, run_scenario, sweep, sweep_jobs
from aqmsim.presets import PRESETS, preset_groups, preset_jobs
from aqmsim.simcore import DumbbellTopology

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def short(aqm="red", **kw):
    cfg = ScenarioConfig(aqm=aqm, udp_rate_bps=2e6, duration_s=6, warmup_s=1,
                         topology=DumbbellTopology(n_tcp=3, n_udp=1, buffer_pkts=30))
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


# ---------------------------------------------------------------- config

@pytest.mark.parametrize("name", list(PRESETS))
def test_preset_configs_round_trip(name):
    for g in preset_groups(name):
        text = dumps(g.config)
        back = loads(text)
        assert dumps(back) == text
        assert back == g.config or dumps(back) == dumps(g.config)


def test_parse_number():
    assert parse_number("150") == 150
    assert parse_number("8M") == 8_000_000
    assert parse_number("0.5M") == 500_000
    assert parse_number("0.002") == 0.002


def test_loads_sample_configs():
    for fn in ("fig4.ini", "sfb.ini"):
        cfg = load(os.path.join(ROOT, "configs", fn))
        cfg.validate()
    assert load(os.path.join(ROOT, "configs", "sfb.ini")).aqm_params["N"] == 23


@pytest.mark.parametrize("text,key", [
    ("[aqm]\nname = wfq\n", "aqm.name"),
    ("[aqm]\nname = red\nmin_th = 120\nmax_th = 100\n", "aqm.max_th"),
    ("[aqm]\nname = blue\nd1 = 2\n", "aqm.d1"),
    ("[aqm]\nname = red\nboxtime = 1\n", "aqm.boxtime"),
    ("[scenario]\nduration_s = 5\nwarmup_s = 10\n", "scenario.duration_s"),
    ("[topology]\nn_tcp = 0\nn_udp = 0\n", "topology.n_tcp"),
    ("[scenario]\nbogus = 1\n", "scenario.bogus"),
    ("[extra]\nx = 1\n", "extra"),
])
def test_config_errors_name_key(text, key):
    with pytest.raises(ConfigError) as e:
        loads(text)
    assert e.value.key == key


def test_with_value_aliases():
    cfg = ScenarioConfig()
    assert get_value(with_value(cfg, "udp_rate", 4e6), "scenario.udp_rate_bps") == 4e6
    assert with_value(cfg, "buffer", 60).topology.buffer_pkts == 60
    with pytest.raises(ConfigError):
        with_value(cfg, "buffer", 60.5)
    assert cfg.topology.buffer_pkts == 150


# ---------------------------------------------------------------- runs

def test_run_result_invariants():
    res = run_scenario(short("choke"))
    assert res.udp_share + res.tcp_share <= 1.0 + 1e-9
    assert res.utilization == pytest.approx(res.udp_share + res.tcp_share)
    total = sum(f.dropped_pkts for f in res.flows)
    assert sum(v for k, v in res.drops_by_cause.items() if not k.startswith("ack_")) == total
    assert set(res.drops_by_cause) <= {"overflow", "probabilistic", "matched", "rate_limited"}
    assert 0 < res.jain_tcp <= 1


def test_sweep_seeds_independent_of_other_values():
    a = sweep_jobs(short(), "udp_rate", [1e6, 2e6, 4e6])
    b = sweep_jobs(short(), "udp_rate", [1e6, 3e6])
    assert len({j[0].seed for j in a}) == 3
    assert a[0][0].seed == b[0][0].seed
    assert a[1][0].seed == b[1][0].seed


def test_sweep_rows_and_errors():
    rows = sweep(short(), "buffer_pkts", [20, 40])
    assert [r.axis_value for r in rows] == [20, 40]
    assert [r.config.topology.buffer_pkts for r in rows] == [20, 40]
    with pytest.raises(ConfigError):
        sweep(short(), "udp_rate", [])
    with pytest.raises(ConfigError):
        sweep(short(), "no_such_key", [1])


def test_parallel_sweep_matches_serial():
    serial = sweep(short(), "udp_rate", [1e6, 3e6])
    parallel = sweep(short(), "udp_rate", [1e6, 3e6], workers=2)
    assert [r.to_json() for r in serial] == [r.to_json() for r in parallel]


def test_preset_jobs_shapes():
    assert len(preset_jobs("fig4")) == 6 * 7
    assert len(preset_jobs("boxtime-fig11")) == 3
    cfg = preset_jobs("blue-fig7")[0][0]
    assert (cfg.topology.n_tcp, cfg.tcp_window_pkts, cfg.topology.buffer_pkts) == (49, 300, 300)
    with pytest.raises(KeyError):
        preset_jobs("fig99")
    short_jobs = preset_jobs("fig5", duration_s=20)
    assert all(j[0].duration_s == 20 and j[0].warmup_s == 2 for j in short_jobs)


def test_sfb_admitted_rate_ceiling(runs):
    res = runs.preset("sfb-fig10")[0]
    window = res.config.duration_s
    assert res.extra["ratelimit_admits"] <= window / res.config.aqm_params.get("boxtime", 0.05) + 1
    assert res.extra["rehash_times"][:3] == [5.0, 10.0, 15.0]


# ---------------------------------------------------------------- CSV

def test_emit_csv_schema_and_determinism(tmp_path):
    r1 = sweep(short(), "udp_rate", [1e6, 2e6])
    r2 = sweep(short(), "udp_rate", [1e6, 2e6])
    p1 = emit_csv(r1, tmp_path / "a")
    p2 = emit_csv(r2, tmp_path / "b")
    for k in ("flows", "queues", "summary"):
        b1, b2 = p1[k].read_bytes(), p2[k].read_bytes()
        assert b1 == b2 and b"\r\n" not in b1
        b1.decode("utf-8")
    assert p1["flows"].read_text().splitlines()[0] == \
        "run_id,flow_id,class,delivered_bytes,dropped,throughput_bps"
    assert p1["queues"].read_text().splitlines()[0] == "run_id,t,class,ewma_len_pkts"
    summary = p1["summary"].read_text().splitlines()
    assert summary[0] == "run_id,axis_value,discipline,utilization,jain_tcp,udp_share"
    assert len(summary) == 3
    flows = p1["flows"].read_text().splitlines()
    assert len(flows) == 1 + 2 * 4


def test_output_paths_directory(tmp_path):
    paths = output_paths(str(tmp_path) + "/")
    assert paths["summary"] == tmp_path / "summary.csv"


def test_emit_csv_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "x")
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_csv([run_scenario(short())], blocker / "sub" / "out")


# ---------------------------------------------------------------- CLI

def test_cli_run(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(dumps(short()))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r.summary.csv").exists()
    assert main(["run", "--config", str(cfg), "--aqm", "sfb", "--seed", "4",
                 "--out", str(tmp_path / "s")]) == 0
    assert ",sfb," in (tmp_path / "s.summary.csv").read_text()


def test_cli_sweep(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(dumps(short()))
    assert main(["sweep", "--config", str(cfg), "--axis", "udp_rate", "--values", "1M,2M",
                 "--out", str(tmp_path) + "/"]) == 0
    assert len((tmp_path / "summary.csv").read_text().splitlines()) == 3


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[aqm]\nname = red\nw_q = 7\n")
    assert main(["run", "--config", str(bad)]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 2
    good = tmp_path / "good.ini"
    good.write_text(dumps(short()))
    assert main(["sweep", "--config", str(good), "--axis", "udp_rate", "--values", "x",
                 "--out", str(tmp_path / "o")]) == 1
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert main(["run", "--config", str(good), "--out", str(blocker / "d" / "o")]) == 2


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(dumps(short(duration_s=3)))
    proc = subprocess.run([sys.executable, "-m", "aqmsim", "run", "--config", str(cfg),
                           "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "util=" in proc.stdout
