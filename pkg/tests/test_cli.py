import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from mublab.acceptance import real_block_chm
from mublab.cli import main
from mublab.constructor import Prop1Params, W, complete_mub_prime
from mublab.matcore import fourier
from mublab.schemas import validate
from mublab.search import read_reports
from mublab.serialize import dump_matrix

F2F3 = np.kron(fourier(2), fourier(3))


@pytest.fixture
def mats(tmp_path):
    paths = {}
    for name, M in {"I6": np.eye(6), "F6": fourier(6), "F2F3": F2F3, "I5": np.eye(5), "F3": fourier(3),
                    "real": real_block_chm(), "D1": complete_mub_prime(3)[1], "D2": complete_mub_prime(3)[2],
                    "D3": complete_mub_prime(3)[3]}.items():
        paths[name] = str(tmp_path / f"{name}.json")
        dump_matrix(M, paths[name])
    return paths


def run(capsys, *argv):
    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:    # argparse usage errors
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_mu_pair(capsys, mats):
    code, out, _ = run(capsys, "verify", "--mub", mats["I6"], "--mub", mats["F6"])
    obj = json.loads(out)
    assert code == 0 and obj["mutually_unbiased"]
    validate(obj, "verify")


def test_verify_not_mu_is_a_finding(capsys, mats):
    code, out, _ = run(capsys, "verify", "--mub", mats["I6"], "--mub", mats["I6"])
    assert code == 2 and not json.loads(out)["mutually_unbiased"]


def test_verify_order_mismatch_names_files(capsys, mats):
    code, _, err = run(capsys, "verify", "--mub", mats["I6"], "--mub", mats["I5"])
    assert code == 1 and "I5.json" in err and "I6.json" in err


def test_verify_needs_two_bases(capsys, mats):
    code, _, err = run(capsys, "verify", "--mub", mats["I6"])
    assert code == 1 and "at least two" in err


def test_missing_file_is_usage_error(capsys):
    assert run(capsys, "verify", "--mub", "/nonexistent.json", "--mub", "/x.json")[0] == 1


def test_parse_error_reports_position(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "rows": 2,\n  ]\n')
    params = tmp_path / "params.json"
    params.write_text('{\n  "alpha": [1, 0],\n  oops\n}\n')
    code, _, err = run(capsys, "construct", "--what", "prop1", "--params", params)
    assert code == 1 and "line 3" in err and "column 3" in err
    code, _, err = run(capsys, "classify", "--matrix", bad)
    assert code == 1 and "error" in err


def test_classify(capsys, mats):
    code, out, _ = run(capsys, "classify", "--matrix", mats["I6"])
    obj = json.loads(out)
    assert code == 0
    validate(obj, "family-witness")
    assert set(obj["families"]) == {"P1", "P2", "P3"}


def test_classify_rejects_entangled(capsys, mats):
    code, _, err = run(capsys, "classify", "--matrix", mats["real"])
    assert code == 1


def test_mu_vectors(capsys, mats):
    code, out, _ = run(capsys, "mu-vectors", "--matrix", mats["F3"])
    obj = json.loads(out)
    assert code == 0 and len(obj["vectors"]) == 6 and obj["exhaustive"]
    validate(obj, "mu-enumeration")


def test_mu_vectors_requires_matrix(capsys):
    code, _, err = run(capsys, "mu-vectors")
    assert code == 1 and "--matrix is required" in err


def test_patterns_finding(capsys, mats):
    code, out, _ = run(capsys, "patterns", "--matrix", mats["F2F3"])
    certs = json.loads(out)
    assert code == 2 and isinstance(certs, list)
    assert {"Y4", "Y7"} <= {c["pattern"] for c in certs}
    validate(certs, "pattern-certificates")


def test_patterns_variant_and_pretty(capsys, mats, tmp_path):
    out_path = tmp_path / "certs.json"
    code, out, _ = run(capsys, "patterns", "--matrix", mats["real"], "--variant", "adjoint",
                       "--format", "pretty", "--out", out_path)
    assert code == 2 and out == ""
    text = out_path.read_text()
    assert text.startswith("[\n  {")
    assert json.loads(text)


def test_patterns_on_non_chm(capsys, mats):
    assert run(capsys, "patterns", "--matrix", mats["I6"])[0] == 1


def test_trio(capsys, mats):
    code, out, _ = run(capsys, "trio", "--matrix", mats["D1"], "--matrix", mats["D2"], "--matrix", mats["D3"])
    assert code == 0 and json.loads(out)["is_trio"]
    code, out, _ = run(capsys, "trio", "--matrix", mats["F2F3"], "--matrix", mats["F2F3"],
                       "--matrix", mats["F6"], "--screen-patterns")
    assert code == 2 and not json.loads(out)["is_trio"]
    validate(json.loads(out), "trio")


def test_trio_needs_three(capsys, mats):
    code, _, err = run(capsys, "trio", "--matrix", mats["F6"])
    assert code == 1 and "exactly 3" in err


@pytest.mark.parametrize("what,verify_code", [("prop1", 2), ("prop2", 2), ("t0", 0), ("t1", 0), ("family", 1)])
def test_construct_bundles_verify(capsys, tmp_path, what, verify_code):
    path = tmp_path / "bundle.json"
    code, _, _ = run(capsys, "construct", "--what", what, "--seed", 3, "--out", path)
    assert code in (0, 2)
    bundle = json.loads(path.read_text())
    validate(bundle, "bundle")
    assert bundle["metadata"]["seed"] == 3
    code, _, _ = run(capsys, "verify", "--bundle", path)
    # product triples are MU, the candidates are not, a single family basis cannot be checked
    assert code == verify_code


def test_construct_params_round_trip(capsys, tmp_path):
    p = Prop1Params(np.exp(0.3j), np.exp(0.7j), np.exp(1.9j), np.exp(2.9j), fourier(3))
    params = tmp_path / "p.json"
    params.write_text(json.dumps(p.to_json()))
    code, out, _ = run(capsys, "construct", "--what", "prop1", "--params", params)
    assert code == 0
    assert json.loads(out)["metadata"]["params"] == p.to_json()


def test_construct_reports_violations(capsys, tmp_path):
    p = Prop1Params(W, np.exp(0.7j), np.exp(1.9j), np.exp(2.9j), fourier(3))
    params = tmp_path / "p.json"
    params.write_text(json.dumps(p.to_json()))
    code, out, _ = run(capsys, "construct", "--what", "prop1", "--params", params)
    assert code == 2
    assert any("alpha" in v for v in json.loads(out)["metadata"]["violations"])


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("MUBLAB_SEED", "17")
    _, a, _ = run(capsys, "construct", "--what", "prop1")
    _, b, _ = run(capsys, "construct", "--what", "prop1", "--seed", 17)
    assert a == b and json.loads(a)["metadata"]["seed"] == 17
    monkeypatch.setenv("MUBLAB_SEED", "18")
    _, c, _ = run(capsys, "construct", "--what", "prop1")
    assert c != a


def test_config_supplies_command_and_defaults(capsys, tmp_path, mats):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "mu-vectors", "matrix": [mats["F3"]], "grid_depth": 4}))
    code, out, _ = run(capsys, "--config", cfg)
    assert code == 0 and len(json.loads(out)["vectors"]) == 6


def test_config_flags_override(capsys, tmp_path, mats):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"format": "pretty"}))
    code, out, _ = run(capsys, "classify", "--config", cfg, "--matrix", mats["I6"], "--format", "json")
    assert code == 0 and "\n" not in out.strip()


def test_bad_tolerance(capsys, mats):
    assert run(capsys, "classify", "--matrix", mats["I6"], "--tol", "-1")[0] == 1


def test_search_census(capsys, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"alpha": {"random": 3}, "beta": [0.3], "x": {"cube_roots": True}, "y": [1.0],
                                "seed": 4}))
    out_path = tmp_path / "census.jsonl"
    code, out, _ = run(capsys, "search", "--grid", grid, "--out", out_path)
    summary = json.loads(out)
    assert code == 0 and summary["records"] == 9
    reports = read_reports(out_path)
    assert len(reports) == 9
    for r in reports:
        validate(r.to_json(), "search-report")


def test_search_census_needs_out(capsys, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"alpha": [0.1]}))
    code, _, err = run(capsys, "search", "--grid", grid)
    assert code == 1 and "--out" in err


def test_search_minimize(capsys):
    code, out, _ = run(capsys, "search", "--max-iters", 1, "--seed", 2)
    rep = json.loads(out)
    assert code == 0 and rep["kind"] == "minimize" and not rep["review"]
    validate(rep, "search-report")


def test_reproduce_subset(capsys, tmp_path):
    out_path = tmp_path / "acc.json"
    code, out, _ = run(capsys, "reproduce", "--only", 1, 2, 3, "--out", out_path)
    assert code == 0 and "3/3 criteria passed" in out
    validate(json.loads(out_path.read_text()), "acceptance")


def test_reproduce_with_injected_fault(capsys):
    code, out, _ = run(capsys, "reproduce", "--only", 1, 3, "--inject", "eq13")
    assert code == 1
    assert "[FAIL]  3." in out and "[PASS]  1." in out and "1/2 criteria passed" in out


def test_no_command_is_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_entry_point_version():
    exe = shutil.which("mublab")
    cmd = [exe] if exe else [sys.executable, "-m", "mublab.cli"]
    res = subprocess.run(cmd + ["--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "mublab" in res.stdout
