import json

import numpy as np
import pytest

from eswsim import cli
from eswsim import model as mdl


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_four_mode(capsys):
    code, out, _ = run(capsys, "verify", "--model", "builtin:four-mode")
    assert code == 0
    rep = json.loads(out)
    assert rep["incompatibility_Eplus_E"]["commutator_norm"] == pytest.approx(1.0, abs=1e-12)
    assert rep["correlation_chain"]["residual_E_T"] <= 1e-12
    assert rep["correlation_chain"]["residual_T_Eplus"] <= 1e-12
    assert rep["detector_T_for_Eplus"]["verdict"] == "pass"


def test_verify_simple(capsys):
    code, out, _ = run(capsys, "verify", "--model", "builtin:simple")
    assert code == 0 and json.loads(out)["verdict"] == "pass"


def test_verify_perturbed_lplus(tmp_path, capsys):
    doc = mdl.model_to_config(mdl.build_four_mode_model())
    lp = np.array(doc["operators"]["Lplus"])
    lp[0, 0, 0] = 0.80
    doc["operators"]["Lplus"] = lp.tolist()
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", "--model", str(path))
    assert code == 1
    rep = json.loads(out)
    idem = {r["name"]: r for r in rep["structure"]}["Lplus.idempotence"]
    assert not idem["pass"] and idem["value"] > 0.01


def test_verify_config_file_passes(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text(mdl.dump_model(mdl.build_simple_model()))
    code, out, _ = run(capsys, "verify", "--model", str(path))
    assert code == 0


@pytest.mark.parametrize("arg", ["builtin:nope", "/nonexistent/model.json"])
def test_verify_bad_model(arg, capsys):
    code, out, err = run(capsys, "verify", "--model", arg)
    assert code == 2 and out == "" and err


def test_verify_malformed_config(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text("{")
    code, _, err = run(capsys, "verify", "--model", str(path))
    assert code == 2 and "invalid" in err


def test_env_tolerance(monkeypatch, capsys):
    monkeypatch.setenv("ESW_DEFAULT_TOL", "1e-9")
    code, out, _ = run(capsys, "verify", "--model", "builtin:simple")
    assert json.loads(out)["tol"] == 1e-9
    monkeypatch.setenv("ESW_DEFAULT_TOL", "abc")
    code, _, _ = run(capsys, "verify")
    assert code == 2


def test_demo(capsys):
    code, out, err = run(capsys, "demo")
    assert code == 0
    rep = json.loads(out)
    assert rep["branch_probabilities"]["1"] == pytest.approx(0.5, abs=1e-12)
    line = next(l for l in err.splitlines() if l.startswith("‖[E+,E]‖"))
    assert float(line.split("=")[1].split()[0]) == pytest.approx(1.0, abs=1e-12)
    assert "0.500000000000000" in err
    assert "outcome 1 for both E and E+" in err


def test_demo_json_only(capsys):
    code, out, err = run(capsys, "demo", "--json")
    assert code == 0 and err == ""
    json.loads(out)


def test_simulate_writes_files_and_is_deterministic(tmp_path, capsys):
    args = ["simulate", "--measure-t", "true", "--runs", "100000", "--seed", "7", "--bins", "64"]
    code, out, _ = run(capsys, *args, "--out", str(tmp_path / "a"))
    assert code == 0
    summary = json.loads(out)
    assert summary["total_variation"] <= 0.02
    assert abs(summary["fraction_t1"] - 0.5) <= 0.01
    code, _, _ = run(capsys, *args, "--out", str(tmp_path / "b"))
    for suffix in ("_hist.csv", "_exact.csv", "_runs.jsonl"):
        assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes()
    header = (tmp_path / "a_hist.csv").read_text().splitlines()[0]
    assert header == "bin_center,probability"
    first = json.loads((tmp_path / "a_runs.jsonl").read_text().splitlines()[0])
    assert set(first) == {"trial", "t_outcome", "position"}


def test_simulate_unmeasured(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "--measure-t", "false", "--runs", "200", "--out", str(tmp_path / "u"))
    assert code == 0 and json.loads(out)["fraction_t1"] is None
    first = json.loads((tmp_path / "u_runs.jsonl").read_text().splitlines()[0])
    assert first["t_outcome"] is None


@pytest.mark.parametrize(
    "extra",
    [["--runs", "0"], ["--bins", "2"], ["--mode-waist", "0.9"], ["--measure-t", "maybe"], ["--n-points", "100"]],
)
def test_simulate_input_errors(tmp_path, capsys, extra):
    code, _, err = run(capsys, "simulate", "--out", str(tmp_path / "x"), *extra)
    assert code == 2 and err


def test_simulate_unwritable(capsys):
    code, _, err = run(capsys, "simulate", "--runs", "10", "--out", "/nonexistent/dir/x")
    assert code == 2 and "cannot write" in err


def _decode(r):
    a = np.array(r)
    return a[..., 0] + 1j * a[..., 1]


def test_synth_four_mode(capsys):
    code, out, _ = run(capsys, "synth", "--model", "builtin:four-mode")
    assert code == 0
    mats = [_decode(d["R"]) for d in json.loads(out)["detectors"]]
    assert any(np.allclose(m, [[0, 0], [0, 1]]) for m in mats)


def test_synth_identity_target(capsys):
    code, out, _ = run(capsys, "synth", "--target", "identity")
    mats = [_decode(d["R"]) for d in json.loads(out)["detectors"]]
    assert code == 0 and any(np.allclose(m, np.eye(2)) for m in mats)


def test_synth_zero_overlap_target(tmp_path, capsys):
    four = mdl.build_four_mode_model()
    v = np.array([1, -1, 0, 0]) / np.sqrt(2)
    doc = mdl.model_to_config(four)
    doc["operators"]["Lplus"] = mdl._encode(np.outer(v, v))
    path = tmp_path / "z.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "synth", "--model", str(path))
    mats = [_decode(d["R"]) for d in json.loads(out)["detectors"]]
    assert code == 0 and any(np.allclose(m, 0) for m in mats)


def test_synth_empty_exits_one(tmp_path, capsys):
    doc = mdl.model_to_config(mdl.build_four_mode_model())
    doc["operators"]["Lplus"] = mdl._encode(np.diag([1, 0, 0, 0]))
    path = tmp_path / "e.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "synth", "--model", str(path))
    assert code == 1 and json.loads(out)["detectors"] == []


def test_synth_missing_target(capsys):
    code, _, err = run(capsys, "synth", "--model", "builtin:simple", "--target", "Eplus")
    assert code == 2


def test_unknown_command(capsys):
    assert cli.main(["bogus"]) == 2
