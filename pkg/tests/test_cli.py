import csv
import io
import json

import pytest

from pivotforge.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_generate_counter_and_mdp(capsys, tmp_path):
    code, out, _ = run(capsys, "generate", "counter-parity", "n=4")
    assert code == 0
    d = json.loads(out)
    assert d["kind"] == "parity" and len(d["bland"]) == 8
    code, out, _ = run(capsys, "generate", "mdp-counter", "L=3", "eps=0")
    assert code == 0 and len(json.loads(out)["actions"]) == 15


def test_generate_bad_params(capsys):
    code, _, err = run(capsys, "generate", "adversarial-parity",
                       'selector={"kind":"constant"}', "m=35", "ell=1")
    assert code == 2 and "divisible by 3" in err
    code, _, err = run(capsys, "generate", "counter-parity", "n")
    assert code == 1 and "key=value" in err


def test_usage_errors(capsys):
    assert run(capsys)[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "--help")[0] == 0
    assert run(capsys, "run", "counter-parity", "n=2", "--rule", "nope")[0] == 1
    assert run(capsys, "run", "counter-parity", "n=2", "--audits", "nope")[0] == 1


def test_run_counter_with_alternation(capsys, tmp_path):
    trace = tmp_path / "t.json"
    code, out, _ = run(capsys, "run", "counter-parity", "n=5", "--audits", "alternation",
                       "--out", str(trace))
    assert code == 0
    (row,) = rows(out)
    assert row["iterations"] == "31" and row["optimal"] == "true"
    assert row["audits"] == "alternation=pass"
    code, out, _ = run(capsys, "audit", str(trace))
    assert code == 0 and json.loads(out)["alternation"]["pass"] is True
    code, out, _ = run(capsys, "audit", str(trace), "--format", "csv")
    assert out.splitlines()[1].startswith("alternation,true")


def test_run_from_file_and_optimal_start(capsys, tmp_path):
    inst = tmp_path / "g.json"
    assert run(capsys, "generate", "counter-parity", "n=3", "--out", str(inst))[0] == 0
    code, out, _ = run(capsys, "run", str(inst))
    assert code == 0 and rows(out)[0]["iterations"] == "7"
    from pivotforge.lowerbound.counter import gen_counter_game
    from pivotforge.parity import strategy_improvement
    from pivotforge.rules import BLAND, greedy_rule
    g, s0 = gen_counter_game(3)
    opt = strategy_improvement(g, s0, greedy_rule(BLAND)).final
    doc = json.loads(inst.read_text())
    doc["initial"] = dict(opt.items())
    inst.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "run", str(inst))
    assert code == 0 and rows(out)[0]["iterations"] == "0"


def test_mdp_agreement_and_negative_control(capsys):
    code, out, _ = run(capsys, "run", "mdp-counter", "L=3", "eps=auto", "--rule", "f1",
                       "--audits", "agreement,canonical-ladder,lockstep", "--format", "json")
    assert code == 0
    (row,) = json.loads(out)
    assert int(row["iterations"]) >= 6
    assert row["audits"] == "agreement=pass;canonical-ladder=pass;lockstep=pass"
    code, out, _ = run(capsys, "run", "mdp-counter", "L=3", "eps=0", "--rule", "f1",
                       "--audits", "agreement")
    assert code == 3 and "agreement=FAIL" in out


def test_cap_exit_code(capsys):
    code, out, _ = run(capsys, "run", "counter-parity", "n=6", "--cap", "10")
    assert code == 4 and rows(out)[0]["optimal"] == "capped"


def test_lockstep_command(capsys):
    code, out, _ = run(capsys, "lockstep", "mdp-counter", "L=2", "--rule", "dantzig")
    assert code == 0 and json.loads(out)["ok"] is True
    code, out, _ = run(capsys, "lockstep", "mdp-counter", "L=2", "--format", "csv")
    assert code == 0 and out.startswith("iter,action,variable")
    assert run(capsys, "lockstep", "counter-parity", "n=2")[0] == 1


def test_decompose_command(capsys):
    code, out, _ = run(capsys, "decompose", "1,16", "--m", "16", "--ell", "2")
    assert code == 0 and json.loads(out)["case"] in ("clustered", "dispersed")
    assert run(capsys, "decompose", "1,x", "--m", "16", "--ell", "2")[0] == 1
    assert run(capsys, "decompose", "1", "--m", "7", "--ell", "2")[0] == 2


def test_batch_config_is_deterministic(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps([
        {"instance": {"family": "counter-parity", "params": {"n": 3}}},
        {"instance": {"family": "random-lp", "params": {"m": 2, "n": 5, "seed": 4}},
         "rule": "dantzig"},
        {"instance": {"family": "adversarial-parity",
                      "params": {"selector": {"kind": "constant"}, "m": 36, "ell": 1}},
         "audits": ["constant-improving-count"]},
    ]))
    outdir = tmp_path / "out"
    code, first, _ = run(capsys, "run", "--config", str(cfg), "--out", str(outdir), "--jobs", "2")
    assert code == 0
    assert sorted(p.name for p in outdir.iterdir()) == ["trace-001.json", "trace-002.json",
                                                        "trace-003.json"]
    code, second, _ = run(capsys, "run", "--config", str(cfg))
    assert first == second
    r = rows(first)
    assert [x["family"] for x in r] == ["counter-parity", "random-lp", "adversarial-parity"]
    assert r[1]["optimal"] == "true"


def test_adversarial_unique_priority_count_audit(capsys):
    sel = '{"kind":"cyclic","ranks":[1,2]}'
    code, out, _ = run(capsys, "run", "adversarial-parity", f"selector={sel}", "m=48", "ell=2",
                       "unique=false", "--audits", "constant-improving-count")
    assert code == 0
    code, out, _ = run(capsys, "run", "adversarial-parity", f"selector={sel}", "m=48", "ell=2",
                       "--audits", "constant-improving-count")
    assert code == 3


def test_run_with_valuations(capsys, tmp_path):
    trace = tmp_path / "t.json"
    assert run(capsys, "run", "mdp-counter", "L=2", "--valuations", "--out", str(trace))[0] == 0
    doc = json.loads(trace.read_text())["trace"]
    first = doc["steps"][0]["extra"]["values"]
    assert [first[s] for s in ("alpha1", "beta1", "beta2", "beta3")] == ["8/1", "6/1", "4/1", "0/1"]
    assert "values" in doc["final_extra"]
    assert run(capsys, "run", "counter-parity", "n=2", "--valuations", "--out", str(trace))[0] == 0
    doc = json.loads(trace.read_text())["trace"]
    assert all("values" in s["extra"] for s in doc["steps"])
    assert run(capsys, "run", "counter-parity", "n=2", "--out", str(trace))[0] == 0
    assert "values" not in json.dumps(json.loads(trace.read_text()))
