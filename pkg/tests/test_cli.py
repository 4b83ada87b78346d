import json
import subprocess
import sys

import pytest

from hidden_influence.cli import main
from hidden_influence.correlations import BehaviorTable, pr_box
from hidden_influence.correlations import BellExpression
from hidden_influence.scenario import local_behavior

import generators as gen
import oracles


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_scenario_text_and_json(capsys):
    code, out, _ = run(capsys, "scenario", "--preset", "fig2b", "--behavior", "local")
    assert code == 0
    assert "A->B" in out and "applies" in out
    code, out, _ = run(capsys, "scenario", "--preset", "fig3c", "--v", "0.2", "--behavior", "local", "--json")
    data = json.loads(out)
    assert code == 0 and data["influence_edges"] == [] and data["params"]["v"] == 0.2


def test_bad_parameters_exit_2(capsys):
    code, _, err = run(capsys, "scenario", "--preset", "fig2b", "--eps", "0.3", "--behavior", "local")
    assert code == 2 and "error" in err


def test_config_file_with_custom_events(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[scenario]\nname = line\nc = 1\n"
                   "[behavior]\nsource = local\nseed = 2\n"
                   "[events]\nA = 0 0 0 @ 0\nB = 1 0 0 @ 0\nC = 3 0 0 @ 0\nD = 4 0 0 @ 0\n"
                   "[model]\nkind = v-causal\nv = 2\n")
    code, out, _ = run(capsys, "scenario", "--config", str(cfg), "--json")
    data = json.loads(out)
    assert data["scenario"] == "line" and data["influence_edges"] == []
    assert code == 0


def test_config_events_need_a_model(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[events]\nA = 0 0 0 @ 0\n[behavior]\nsource = local\n")
    code, _, err = run(capsys, "scenario", "--config", str(cfg))
    assert code == 2 and "model" in err


def test_preset_from_config_with_cli_override(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[scenario]\npreset = fig2b\neps = 0.05\n[behavior]\nsource = local\n")
    code, out, _ = run(capsys, "scenario", "--config", str(cfg), "--eps", "0.1", "--json")
    assert json.loads(out)["params"]["eps"] == 0.1


def test_check_ns(tmp_path, capsys):
    good = tmp_path / "pr.txt"
    good.write_text(pr_box().dumps())
    assert run(capsys, "check-ns", str(good))[0] == 0
    P = pr_box().to_float()
    probs = P.probs.copy()
    probs[0, 0, 1, 1] += 0.01
    probs[0, 1, 1, 1] -= 0.01
    bad = tmp_path / "bad.txt"
    bad.write_text(BehaviorTable(probs, P.parties).dumps())
    code, out, _ = run(capsys, "check-ns", str(bad), "--json")
    data = json.loads(out)
    assert code == 1 and data["violations"][0]["party"] == "A"
    assert run(capsys, "check-ns", str(tmp_path / "missing.txt"))[0] == 2


def test_decompose_writes_certificate(tmp_path, capsys):
    abd, acd = gen.monogamy_pair()
    (tmp_path / "abd.txt").write_text(abd.dumps())
    (tmp_path / "acd.txt").write_text(acd.dumps())
    cert = tmp_path / "cert.txt"
    code, out, _ = run(capsys, "decompose", "--abd", str(tmp_path / "abd.txt"),
                       "--acd", str(tmp_path / "acd.txt"), "--certificate", str(cert), "--json")
    data = json.loads(out)
    assert code == 0 and data["status"] == "infeasible" and data["certified"]
    expr = BellExpression.loads(cert.read_text())
    assert str(expr.bound) == data["bound"]
    value = sum((c * t.probs).sum() for c, t in zip(expr.coefficients, (abd, acd)))
    assert str(value - expr.bound) == data["margin"]


def test_decompose_local_table_exit_1(tmp_path, capsys):
    t = tmp_path / "local.txt"
    t.write_text(local_behavior(1).table.dumps())
    code, out, _ = run(capsys, "decompose", "--table", str(t))
    assert code == 1 and "feasible" in out
    assert run(capsys, "decompose")[0] == 2


def test_witness(capsys):
    code, out, _ = run(capsys, "witness", "--preset", "fig2b", "--behavior", "local", "--json")
    data = json.loads(out)
    assert code == 0
    assert data["A'"]["nearest_distance"] == pytest.approx(oracles.FIG2_A_PRIME, rel=1e-6)
    code, out, _ = run(capsys, "witness", "--preset", "fig2b", "--behavior", "local", "--which", "D'")
    assert code == 0 and out.startswith("D'")
    assert run(capsys, "witness", "--preset", "fig2b", "--behavior", "local", "--which", "Q'")[0] == 2


def test_pipeline_local_is_false(tmp_path, capsys):
    out_file = tmp_path / "rep.json"
    code, _, _ = run(capsys, "pipeline", "--preset", "fig3d", "--behavior", "local", "--json",
                     "--out", str(out_file))
    assert code == 1
    assert json.loads(out_file.read_text())["ftl_verdict"] is False


def test_pipeline_with_infeasible_marginals_is_true(tmp_path, capsys):
    abd, acd = gen.monogamy_pair()
    (tmp_path / "abd.txt").write_text(abd.dumps())
    (tmp_path / "acd.txt").write_text(acd.dumps())
    code, out, _ = run(capsys, "pipeline", "--preset", "fig2b", "--behavior", "marginals",
                       "--abd", str(tmp_path / "abd.txt"), "--acd", str(tmp_path / "acd.txt"))
    assert code == 0 and "faster-than-light" in out


def test_sweep(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "--preset", "fig3c", "--param", "v=0.1:0.3:3",
                       "--behavior", "local")
    lines = out.strip().splitlines()
    assert code == 1 and len(lines) == 4
    assert run(capsys, "sweep", "--preset", "fig3c")[0] == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hidden_influence", "scenario", "--preset", "fig1b",
                          "--behavior", "local"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "v-causal" in res.stdout
