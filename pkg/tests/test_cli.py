"""Command-line interface: exit codes, report formats, registries, eval oracles."""

import json

import numpy as np
import pytest

from bochnerlab import cli


def run_cli(argv):
    return cli.main(argv)


def test_list_fixtures(capsys):
    assert run_cli(["list", "fixtures"]) == 0
    out = capsys.readouterr().out
    for name in ("T2-flat", "S2-round", "T3-flat"):
        assert name in out


def test_list_checks_shows_anchors(capsys):
    assert run_cli(["list", "checks"]) == 0
    out = capsys.readouterr().out
    assert "[E-Wei]" in out
    assert "[GrindEP-2-6]" in out
    assert "classical-weitzenbock" in out


def test_list_structures(capsys):
    assert run_cli(["list", "structures"]) == 0
    out = capsys.readouterr().out
    assert "P-id" in out and "K-cubic" in out


def test_eval_ricci_matches_round_metric(capsys):
    code = run_cli(["eval", "ricP", "--fixture", "S2-round",
                    "--structure", "P-id:K-0", "--point", "1.0,0.5"])
    assert code == 0
    rows = capsys.readouterr().out.strip().splitlines()
    mat = np.array([[float(v) for v in r.split()] for r in rows])
    want = np.diag([1.0, np.sin(1.0) ** 2])
    assert np.allclose(mat, want, atol=1e-10)


def test_eval_divergence_oracle(capsys):
    code = run_cli(["eval", "divP", "--fixture", "T2-flat",
                    "--structure", "P-proj:K-0",
                    "--field", "sinx*dx_vec", "--point", "0,0"])
    assert code == 0
    assert float(capsys.readouterr().out.strip()) == pytest.approx(1.0, abs=1e-12)


def test_eval_defect_zero_vector(capsys):
    code = run_cli(["eval", "frakD", "--fixture", "T2-flat",
                    "--structure", "P-id:K-0", "--point", "0.3,0.7"])
    assert code == 0
    vals = [float(v) for v in capsys.readouterr().out.split()]
    assert vals == [0.0, 0.0]


def test_eval_bad_names_exit_2(capsys):
    assert run_cli(["eval", "ricP", "--fixture", "nope",
                    "--structure", "P-id:K-0", "--point", "0,0"]) == 2
    assert run_cli(["eval", "ricP", "--fixture", "T2-flat",
                    "--structure", "P-id", "--point", "0,0"]) == 2
    assert run_cli(["eval", "ricP", "--fixture", "T2-flat",
                    "--structure", "P-id:K-0", "--point", "0,0,0"]) == 2
    assert run_cli(["eval", "divP", "--fixture", "T2-flat",
                    "--structure", "P-id:K-0", "--point", "0,0"]) == 2
    capsys.readouterr()


def test_verify_passing_scenario_exit_0(capsys):
    code = run_cli(["verify", "--scenario", "T2-flat:P-proj:K-0",
                    "--grid", "8"])
    assert code == 0
    out = capsys.readouterr().out
    assert "0 failed" in out


def test_verify_negative_control_exit_1(capsys):
    code = run_cli(["verify", "--scenario", "T2-flat:P-sing:K-0",
                    "--grid", "8"])
    assert code == 1
    err = capsys.readouterr().err
    assert "check failed" in err
    assert "[" in err  # anchor is named


def test_verify_missing_config_exit_2(capsys, tmp_path):
    assert run_cli(["verify", "--config", str(tmp_path / "none.json")]) == 2


def test_verify_bad_shorthand_exit_2(capsys):
    assert run_cli(["verify", "--scenario", "T2-flat:P-id"]) == 2


def test_verify_json_round_trips(tmp_path, capsys):
    out = tmp_path / "rep.json"
    code = run_cli(["verify", "--scenario", "T2-flat:P-id:K-0",
                    "--grid", "8", "--format", "json", "--out", str(out)])
    assert code == 0
    body = json.loads(out.read_text())
    assert set(body) == {"meta", "scenarios"}
    sc = body["scenarios"][0]
    assert sc["scenario"] == "T2-flat:P-id:K-0"
    for c in sc["checks"]:
        assert set(c) >= {"name", "anchor", "residual", "tolerance",
                          "status", "witness"}
    # serialize -> parse -> serialize is a fixed point
    assert cli.dumps_report(body) == out.read_text()


def test_verify_config_file(tmp_path, capsys):
    cfg = {"seed": 5,
           "scenarios": ["T2-flat:J-rot:K-0",
                         {"fixture": "T2-flat", "p": "P-id", "k": "K-0",
                          "degrees": [1], "grid": 8, "quad_grid": 32}],
           "format": "json"}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code = run_cli(["verify", "--config", str(path), "--grid", "8"])
    assert code == 0
    body = json.loads(capsys.readouterr().out)
    assert body["meta"]["seed"] == 5
    assert [s["scenario"] for s in body["scenarios"]] == [
        "T2-flat:J-rot:K-0", "T2-flat:P-id:K-0"]


def test_verify_config_bad_scenario_key_exit_2(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"scenarios": [{"fixture": "T2-flat",
                                               "p": "P-id", "k": "K-0",
                                               "bogus": 1}]}))
    assert run_cli(["verify", "--config", str(path)]) == 2


def test_thread_cap_env(tmp_path, capsys, monkeypatch):
    args = ["verify", "--scenario", "T2-flat:P-id:K-0",
            "--scenario", "T2-flat:P-proj:K-0", "--grid", "8",
            "--format", "json"]
    monkeypatch.delenv("BOCHNERLAB_THREADS", raising=False)
    assert run_cli(args) == 0
    seq = capsys.readouterr().out
    monkeypatch.setenv("BOCHNERLAB_THREADS", "2")
    assert run_cli(args) == 0
    par = capsys.readouterr().out
    assert seq == par
    monkeypatch.setenv("BOCHNERLAB_THREADS", "what")
    assert run_cli(args) == 2
