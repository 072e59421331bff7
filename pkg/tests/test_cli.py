"""Command-line interface: exit codes, output files, determinism."""

import json

import pytest

from twillsim import presets
from twillsim.cli import main


def test_run_prints_the_summary_line(capsys):
    assert main(["run", "--mix", "mix1"]) == 0
    out = capsys.readouterr().out
    assert "scenario=mix1 policy=twill platform=orin-nx-10w" in out
    assert "makespan_ms=1344.372843" in out
    assert "total_waiting_ms=0.0" in out
    # one table row per request
    assert "bert-base-0" in out and "efficientnet-b4-0" in out


def test_run_writes_the_four_trace_files(tmp_path, capsys):
    out_dir = tmp_path / "trace"
    assert main(["run", "--mix", "mix2", "--out", str(out_dir)]) == 0
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == ["decisions.csv", "power.csv", "requests.csv", "summary.json"]
    header = (out_dir / "decisions.csv").read_text().splitlines()[0]
    assert header == "time_ms,kind,request_id,part,cluster_id,level,freq_mhz"
    doc = json.loads((out_dir / "summary.json").read_text())
    assert doc["scenario"] == "mix2"
    assert doc["policy"] == "twill"


def test_repeat_invocations_write_identical_bytes(tmp_path, capsys):
    for sub in ("one", "two"):
        assert main(["run", "--mix", "mix3", "--policy", "static_dvfs",
                     "--out", str(tmp_path / sub)]) == 0
    for name in ("decisions.csv", "requests.csv", "power.csv", "summary.json"):
        assert ((tmp_path / "one" / name).read_bytes()
                == (tmp_path / "two" / name).read_bytes()), name


def test_missing_scenario_file_exits_one(capsys):
    assert main(["run", "--mix", "/no/such/file.json"]) == 1
    assert "/no/such/file.json" in capsys.readouterr().err


def test_unknown_mix_name_lists_the_options(capsys):
    assert main(["run", "--mix", "mix99"]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "mix1" in err


def test_unknown_set_key_exits_one(capsys):
    assert main(["run", "--mix", "mix1", "--set", "bogus=1"]) == 1
    assert "bogus" in capsys.readouterr().err


def test_set_overrides_reach_the_platform(capsys):
    assert main(["run", "--mix", "mix1", "--set", "tdp_mw=12000"]) == 0
    out = capsys.readouterr().out
    # a looser cap lets the governor hold the top bin with both busy
    assert "makespan_ms=1317.534973" in out


def test_platform_file_flag_loads_a_custom_board(tmp_path, capsys):
    doc = json.loads(presets.platform_text())
    doc["tdp_mw"] = 12000.0
    board = tmp_path / "board.json"
    board.write_text(json.dumps(doc))
    assert main(["run", "--mix", "mix1", "--platform", str(board)]) == 0
    assert "makespan_ms=1317.534973" in capsys.readouterr().out

    assert main(["run", "--mix", "mix1", "--platform",
                 str(tmp_path / "nope.json")]) == 1
    assert "nope.json" in capsys.readouterr().err


def test_random_mix_is_seeded(capsys):
    assert main(["run", "--mix", "random", "--seed", "7"]) == 0
    first = capsys.readouterr().out
    assert main(["run", "--mix", "random", "--seed", "7"]) == 0
    again = capsys.readouterr().out
    assert first == again
    assert main(["run", "--mix", "random", "--seed", "8"]) == 0
    other = capsys.readouterr().out
    assert other != first


def test_compare_needs_at_least_two_policies(capsys):
    assert main(["compare", "--mixes", "mix1", "--policies", "twill"]) == 1
    assert "compare requires >=2 policies" in capsys.readouterr().err


def test_compare_rejects_unknown_policies(capsys):
    assert main(["compare", "--mixes", "mix1",
                 "--policies", "twill", "round_robin"]) == 1
    assert "round_robin" in capsys.readouterr().err


def test_compare_reports_improvement_and_writes_csv(tmp_path, capsys):
    assert main(["compare", "--mixes", "mix1",
                 "--policies", "twill", "gpu_queue",
                 "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "twill_makespan_improvement_pct" in out

    rows = (tmp_path / "comparison.csv").read_text().splitlines()
    assert rows[0] == ("mix,policy,makespan_ms,total_waiting_ms,"
                       "violation_fraction,energy_mj,"
                       "twill_makespan_improvement_pct")
    assert len(rows) == 3  # header + one row per policy
    twill_row = next(r for r in rows[1:] if ",twill," in r)
    base_row = next(r for r in rows[1:] if ",gpu_queue," in r)
    assert twill_row.split(",")[-1] == ""  # no improvement over itself
    assert base_row.split(",")[-1] == "16.71"


def test_usage_errors_exit_one(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["run"]) == 1  # --mix is required


def test_protocol_breakage_is_an_internal_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "name": "bad",
        "requests": [{"model": "vgg-19", "priority": 1,
                      "arrival_ms": 0, "workload_size": 1}],
        "platform_overrides": {"bogus": 1.0},
    }))
    assert main(["run", "--mix", str(bad)]) == 2
    assert capsys.readouterr().err.startswith("internal error:")
