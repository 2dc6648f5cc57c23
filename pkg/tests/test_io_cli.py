import io as stdio
import json
import random
import sys
from fractions import Fraction

import numpy as np
import pytest

from corrlab import io
from corrlab.cli import run
from corrlab.lhv import evaluate_model
from corrlab.locality import make_pr_box, prop1_witness
from corrlab.quantum import DensityOperator, isotropic_state, random_density
from corrlab.scenario import Scenario, behavior_to_correlations

from generators import random_local_behavior, random_model


def invoke(argv, stdin=None, monkeypatch=None, capsys=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", stdio.StringIO(stdin))
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def demo(name, capsys, *extra):
    assert run(["demo", name, *extra]) == 0
    return capsys.readouterr().out


def test_behavior_round_trip():
    rng = random.Random(1)
    b = random_local_behavior(rng, Scenario(((2, 3), (2,), (3, 2))))
    back = io.behavior_from_json(json.loads(json.dumps(io.behavior_to_json(b))))
    for t in b.tables:
        assert (back.tables[t] == b.tables[t]).all()
    flt = io.behavior_from_json(io.behavior_to_json(b), mode="float")
    assert flt.mode == "float"


def test_collection_correlation_model_round_trips():
    coll = io.collection_from_json(io.collection_to_json(prop1_witness()))
    assert coll.context_labels == ("A", "B")
    c = behavior_to_correlations(make_pr_box())
    assert io.correlations_from_json(io.correlations_to_json(c)).means == c.means
    rng = random.Random(2)
    scn = Scenario.uniform(2, 2)
    m = random_model(rng, scn)
    m2 = io.model_from_json(io.model_to_json(m))
    a, b = evaluate_model(m, scn), evaluate_model(m2, scn)
    assert all((a.tables[t] == b.tables[t]).all() for t in a.tables)


def test_state_round_trip():
    rng = np.random.default_rng(0)
    rho = DensityOperator((2, 2), random_density(4, rng))
    assert np.allclose(io.state_from_json(io.state_to_json(rho)).matrix, rho.matrix)


def test_schema_errors():
    with pytest.raises(io.SchemaError):
        io.behavior_from_json({"parties": 1, "settings": [1], "tables": {"0": ["1/0", 1]}})
    with pytest.raises(io.SchemaError):
        io.behavior_from_json({"parties": 1, "settings": [1], "tables": {"0": [1]}})
    with pytest.raises(io.SchemaError):
        io.behavior_from_json({"parties": 1, "settings": [1]})
    assert io.parse_number(0.1, "exact") == Fraction(1, 10)


def test_pr_box_pipeline(capsys, monkeypatch):
    code, out, _ = invoke(["lhv-check"], demo("pr-box", capsys), monkeypatch, capsys)
    assert code == 1
    report = json.loads(out)
    assert report["verdict"] == "infeasible"
    assert report["mode"] == "exact"
    full = report["certificate"]["correlator_form"]["coefficients"]
    vals = [Fraction(full[f"0,1|{t}"]) for t in ("0,0", "0,1", "1,0", "1,1")]
    assert [v / vals[0] for v in vals] == [1, 1, 1, -1]


def test_threshold_pipeline(capsys, monkeypatch):
    code, out, _ = invoke(["threshold", "--s1", "2", "--s2", "2"],
                          demo("isotropic", capsys, "--d", "2", "--gamma", "0.5"), monkeypatch, capsys)
    assert code == 0
    assert json.loads(out)["threshold"] == pytest.approx(0.5, abs=1e-12)


def test_malformed_json(capsys, monkeypatch):
    code, out, err = invoke(["validate"], "{not json", monkeypatch, capsys)
    assert code == 2 and "invalid JSON" in err and out == ""


def test_missing_file(capsys):
    code, _, err = invoke(["validate", "/nonexistent.json"], capsys=capsys)
    assert code == 2 and "cannot read" in err


def test_bad_arguments(capsys):
    assert run(["threshold"]) == 2
    assert run(["no-such-command"]) == 2
    capsys.readouterr()


@pytest.mark.parametrize("command", ["validate", "nonsignaling", "lhv-check"])
def test_demo_outputs_never_error(command, capsys, monkeypatch):
    for name in ("pr-box", "chsh-singlet"):
        code, out, _ = invoke([command, "--format", "json"], demo(name, capsys), monkeypatch, capsys)
        assert code in (0, 1)
        json.loads(out)


def test_chsh_singlet_infeasible(capsys, monkeypatch):
    code, out, _ = invoke(["lhv-check"], demo("chsh-singlet", capsys), monkeypatch, capsys)
    assert code == 1
    assert json.loads(out)["certificate"]["margin"] > 0


def test_quantum_behavior_command(tmp_path, capsys):
    (tmp_path / "s.json").write_text(demo("chsh-singlet", capsys, "--part", "state"))
    (tmp_path / "u.json").write_text(demo("chsh-singlet", capsys, "--part", "setup"))
    code, out, _ = invoke(["quantum-behavior", str(tmp_path / "s.json"), str(tmp_path / "u.json")],
                          capsys=capsys)
    assert code == 0
    (tmp_path / "b.json").write_text(out)
    code, _, _ = invoke(["nonsignaling", str(tmp_path / "b.json")], capsys=capsys)
    assert code == 0


def test_epr_local_command(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(io.collection_to_json(prop1_witness())))
    code, out, _ = invoke(["epr-local", str(path)], capsys=capsys)
    report = json.loads(out)
    assert code == 1
    assert report["verdict"] == "fail"
    assert report["contexts"] == {"A": "pass", "B": "pass"}
    assert set(report) >= {"verdict", "violation", "witness", "mode", "epsilon"}


def test_correlations_command(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(io.correlations_to_json(behavior_to_correlations(make_pr_box()))))
    assert invoke(["lhv-from-correlations", str(path)], capsys=capsys)[0] == 1
    doc = json.loads(path.read_text())
    doc["means"] = {k: v for k, v in doc["means"].items() if k.startswith("0,1|")}
    path.write_text(json.dumps(doc))
    code, _, err = invoke(["lhv-from-correlations", str(path)], capsys=capsys)
    assert code == 2 and "incomplete" in err


def test_source_op_command(capsys, monkeypatch):
    psi = {"dims": [2, 2], "matrix": [[[v, 0] for v in row] for row in
                                      (np.outer([1, 0, 0, 1], [1, 0, 0, 1]) / 2).tolist()]}
    code, out, _ = invoke(["source-op", "--gamma", "0.5", "--copies", "2"], json.dumps(psi), monkeypatch, capsys)
    assert code == 0 and json.loads(out)["verdict"] == "pass"
    code, out, _ = invoke(["source-op", "--gamma", "0.9", "--copies", "3"], json.dumps(psi), monkeypatch, capsys)
    assert code == 1 and not json.loads(out)["checks"]["positive"]["pass"]


def test_epsilon_env_and_text_format(capsys, monkeypatch):
    monkeypatch.setenv("CORRLAB_EPSILON", "1e-6")
    code, out, _ = invoke(["nonsignaling", "--format", "text", "--mode", "float"], demo("pr-box", capsys),
                          monkeypatch, capsys)
    assert code == 0 and "epsilon: 1e-06" in out and "verdict: pass" in out
    monkeypatch.setenv("CORRLAB_EPSILON", "zero")
    assert run(["demo", "pr-box"]) == 2


def test_cap_is_resource_error(capsys, monkeypatch):
    code, _, err = invoke(["lhv-check", "--cap", "4"], demo("pr-box", capsys), monkeypatch, capsys)
    assert code == 2 and "cap" in err


def test_isotropic_state_document_is_valid():
    doc = io.state_to_json(isotropic_state(3, 0.25))
    assert io.state_from_json(doc).dims == (3, 3)
