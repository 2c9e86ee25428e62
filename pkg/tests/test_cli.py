import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from ergokit.cli import dumps, main, parse_config

DATA = Path(__file__).resolve().parents[1] / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def doc(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out)


def test_entropy_run(capsys):
    code, d = doc(capsys, "entropy", "--space", DATA / "golden.json", "--n", 12, "--scale", 1)
    assert code == 0 and d["ok"]
    assert abs(d["result"]["reference"] - math.log((1 + math.sqrt(5)) / 2)) < 1e-10
    assert d["config"]["seed"] == 20240601 and "budget" in d["config"]


def test_missing_file_is_usage(capsys):
    code, out, err = run(capsys, "entropy", "--space", "no/such.json", "--n", 3)
    assert code == 2 and "no/such.json" in err and out == ""


def test_qbound_delta_range(capsys):
    code, _, err = run(capsys, "qbound", "--n", 5, "--delta", 0.7)
    assert code == 2 and "--delta" in err


def test_unknown_flag_named(capsys):
    code, _, err = run(capsys, "qbound", "--n", 5, "--delta", 0.2, "--colour", "red")
    assert code == 2 and "--colour" in err


def test_unknown_space_key(capsys, tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"backend": "full", "alphabet": 2, "flavour": 1}))
    code, _, err = run(capsys, "language", "--space", f, "--n", 3)
    assert code == 2 and "flavour" in err


def test_budget_exhaustion(capsys):
    code, _, err = run(capsys, "language", "--space", DATA / "hereditary.json", "--n", 12, "--budget", 10)
    assert code == 3 and "budget" in err


def test_failed_trace_is_check_failure(capsys):
    code, d = doc(
        capsys, "trace", "--space", DATA / "full2.json", "--task", DATA / "task_approx.json", "--tracer", "1" * 20, "--starts", "0,8"
    )
    assert code == 1 and not d["ok"]
    assert d["checks"] == {"verified": False}


def test_trace_search_golden(capsys):
    code, d = doc(capsys, "trace", "--space", DATA / "golden.json", "--task", DATA / "task_golden.json")
    assert code == 0 and d["result"]["found"]
    assert "11" not in d["result"]["tracer"]


def test_spectrum_entropy(capsys):
    code, d = doc(capsys, "spectrum", "--target", "entropy=0.34657", "--family", "bernoulli")
    assert code == 0
    assert abs(d["result"]["t"] - 0.1100) < 1e-4
    assert d["result"]["measure"]["type"] == "markov"


def test_spectrum_out_of_range_reports_range(capsys):
    code, d = doc(capsys, "spectrum", "--target", "entropy=0.9")
    assert code == 1
    assert d["result"]["attained"][1] == pytest.approx(math.log(2))


def test_spectrum_bad_target(capsys):
    code, _, err = run(capsys, "spectrum", "--target", "volume=3")
    assert code == 2 and "--target" in err


def test_pressure_reference(capsys):
    code, d = doc(
        capsys, "pressure", "--space", DATA / "full2.json", "--potential", DATA / "indicator1.json", "--n", 14
    )
    assert code == 0 and d["checks"]["matches_reference"]


def test_pressure_scale_below_range_is_usage(capsys, tmp_path):
    f = tmp_path / "phi.json"
    f.write_text(json.dumps({"table": {"00": 0, "01": 1, "10": 0, "11": 0}}))
    code, _, err = run(capsys, "pressure", "--space", DATA / "full2.json", "--potential", f, "--n", 4)
    assert code == 2 and "m = 1 < r = 2" in err


def test_csv_series(capsys):
    code, out, _ = run(capsys, "entropy", "--space", DATA / "full2.json", "--n", 4, "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "n,count,ln_count_over_n" and len(lines) == 5
    code, _, err = run(capsys, "separated", "--space", DATA / "full2.json", "--n", 3, "--format", "csv")
    assert code == 2 and "CSV" in err


def test_threads_env(capsys, monkeypatch):
    monkeypatch.setenv("ERGOKIT_THREADS", "zero")
    code, _, err = run(capsys, "qbound", "--n", 3, "--delta", 0.2)
    assert code == 2 and "ERGOKIT_THREADS" in err
    monkeypatch.setenv("ERGOKIT_THREADS", "2")
    assert run(capsys, "qbound", "--n", 3, "--delta", 0.2)[0] == 0


def test_out_file(capsys, tmp_path):
    target = tmp_path / "r.json"
    code, out, _ = run(capsys, "qbound", "--n", 6, "--delta", 0.25, "--out", target)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["checks"]["bound_holds"]


def test_seed_recorded_and_validated(capsys):
    code, d = doc(capsys, "qbound", "--n", 2, "--delta", 0.1, "--seed", 7)
    assert d["config"]["seed"] == 7
    assert run(capsys, "qbound", "--n", 2, "--delta", 0.1, "--seed", -1)[0] == 2


def test_parse_config_collects_files():
    cfg = parse_config(["pressure", "--space", str(DATA / "full2.json"), "--potential", str(DATA / "indicator1.json"), "--n", "3"])
    assert set(cfg.files) == {"space", "potential"}
    assert cfg.params["n"] == 3


def test_dumps_is_canonical():
    a = dumps({"b": 0.1, "a": [1, 2.0, float("inf")], "c": {"z": True, "y": None}})
    b = dumps({"c": {"y": None, "z": True}, "a": [1, 2.0, float("inf")], "b": 0.1})
    assert a == b
    assert "0.10000000000000001" in a and '"inf"' in a


def test_construct_desk_exit_zero(capsys):
    code, d = doc(
        capsys,
        "construct",
        "--space", DATA / "full2.json",
        "--h0", 0.3, "--beta0", 0.15, "--eta0", 0.4, "--depth", 3,
    )
    assert code == 0
    assert d["result"]["params"]["ledger"]
    assert all(d["checks"].values())


def test_construct_strict_reports_ledger(capsys):
    code, d = doc(
        capsys,
        "construct",
        "--space", DATA / "full2.json",
        "--h0", 0.3, "--beta0", 0.15, "--eta0", 0.4, "--depth", 3, "--strict",
    )
    assert code == 1
    assert "infeasible" in d["result"] or d["checks"].get("ledger") is False


def test_verify_deterministic_bytes(tmp_path):
    outs = []
    for k in range(2):
        f = tmp_path / f"v{k}.json"
        assert main(["verify", "--suite", "all", "--out", str(f)]) == 0
        outs.append(f.read_bytes())
    assert outs[0] == outs[1]


def test_console_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "ergokit.cli", "qbound", "--n", "4", "--delta", "0.3"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert res.returncode == 0
    assert json.loads(res.stdout)["ok"] is True
