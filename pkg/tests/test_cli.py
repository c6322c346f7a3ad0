import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from scrn import cli, train
from scrn.errors import DescentViolation

SVG = "{http://www.w3.org/2000/svg}"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def xor(tmp_path, capsys):
    path = tmp_path / "xor.csv"
    assert run(capsys, "gen", "xor", "--out", path)[0] == 0
    return path


@pytest.fixture
def rings(tmp_path, capsys):
    path = tmp_path / "rings.csv"
    assert run(capsys, "gen", "rings", "--inner", 8, "--outer", 8, "--out", path)[0] == 0
    return path


def test_gen(xor, capsys, tmp_path):
    assert xor.read_text().count("\n") == 5
    code, _, err = run(capsys, "gen", "rings", "--rin", 3, "--rout", 1, "--out", tmp_path / "r.csv")
    assert code == 2
    assert json.loads(err)["error"] == "ConfigError"


def test_gen_echoes_verdicts(tmp_path, capsys):
    code, out, _ = run(capsys, "gen", "xor", "--out", tmp_path / "x.csv")
    verdicts = json.loads(out)["verdicts"]
    assert verdicts == {"linear": False, "convex_0_from_1": True, "convex_1_from_0": True, "mutual_convex": True}


@pytest.mark.parametrize("mode, expected", [("linear", False), ("mutual_convex", True), ("convex", True)])
def test_check(xor, capsys, mode, expected):
    code, out, _ = run(capsys, "check", "--data", xor, "--mode", mode)
    assert code == 0
    assert json.loads(out)["separable"] is expected


def test_check_pairwise_and_errors(rings, capsys, tmp_path):
    code, out, _ = run(capsys, "check", "--data", rings, "--mode", "pairwise")
    assert code == 0 and json.loads(out)["separable"] is False
    assert run(capsys, "check", "--data", tmp_path / "missing.csv", "--mode", "linear")[0] == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["check", "--data", str(rings), "--mode", "bogus"])
    assert info.value.code == 2
    assert run(capsys, "check", "--data", rings, "--mode", "linear", "--classes", "0,7")[0] == 2


def test_construct(xor, rings, capsys, tmp_path):
    code, out, _ = run(capsys, "construct", "--data", xor, "--method", "shl", "--out", tmp_path / "m.json")
    summary = json.loads(out)
    assert code == 0 and summary["separates"]
    assert min(summary["margins"]) >= 1 - 1e-9

    code, out, err = run(capsys, "construct", "--data", rings, "--method", "shl", "--out", tmp_path / "r.json")
    assert code == 1 and out == ""
    reason = json.loads(err)
    assert reason["error"] == "NotConvexlySeparable"
    assert reason["point"] == [0.0, 0.0]
    assert "\n" not in err.strip()

    code, out, _ = run(capsys, "construct", "--data", rings, "--method", "thl", "--out", tmp_path / "t.json")
    assert code == 0 and json.loads(out)["separates"]


def test_construct_multiclass(tmp_path, capsys):
    blobs = tmp_path / "b.csv"
    run(capsys, "gen", "blobs", "--classes", 3, "--out", blobs)
    for method in ("shl-multi", "thl-multi"):
        code, out, _ = run(capsys, "construct", "--data", blobs, "--method", method, "--out", tmp_path / "m.json")
        assert code == 0 and json.loads(out)["separates"]


def test_train(xor, capsys, tmp_path):
    report = tmp_path / "rep.json"
    trace = tmp_path / "t.csv"
    fig = tmp_path / "t.svg"
    code, out, _ = run(capsys, "train", "--data", xor, "--arch", "shl", "--hidden", 2, "--seed", 0,
                       "--out", tmp_path / "m.json", "--trace", trace, "--report", report, "--figure", fig)
    assert code == 0
    assert json.loads(out)["accuracy"] == 1.0
    assert json.loads(report.read_text())["margins_pos"]
    assert trace.read_text().startswith("iteration,objective,surrogate_min,time_ms,step")
    assert ET.parse(fig).getroot().tag == f"{SVG}svg"
    assert run(capsys, "train", "--data", xor, "--arch", "shl", "--hidden", 0, "--out", tmp_path / "x.json")[0] == 2


def test_train_descent_violation_exit_code(xor, capsys, tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise DescentViolation("objective rose")

    monkeypatch.setattr(train, "train_shl", broken)
    code, _, err = run(capsys, "train", "--data", xor, "--arch", "shl", "--out", tmp_path / "m.json")
    assert code == 3 and json.loads(err)["error"] == "DescentViolation"


def test_decompose(xor, rings, capsys, tmp_path):
    model = tmp_path / "m.json"
    run(capsys, "construct", "--data", xor, "--method", "shl", "--out", model)
    out_path = tmp_path / "rep.json"
    code, _, _ = run(capsys, "decompose", "--data", xor, "--model", model, "--mode", "shl", "--out", out_path)
    report = json.loads(out_path.read_text())
    assert code == 0 and report["coverage_ok"] and len(report["subsets"]) == 2

    thl = tmp_path / "t.json"
    run(capsys, "construct", "--data", rings, "--method", "thl", "--out", thl)
    code, _, _ = run(capsys, "decompose", "--data", rings, "--model", thl, "--mode", "thl", "--out", out_path,
                     "--figure", tmp_path / "d.svg")
    report = json.loads(out_path.read_text())
    assert code == 0 and all(s["verification"]["convexly_separable"] for s in report["subsets"])

    code, _, err = run(capsys, "decompose", "--data", xor, "--model", thl, "--mode", "thl", "--out", out_path)
    assert code == 1 and json.loads(err)["error"] == "ModelDoesNotSeparate"
    assert run(capsys, "decompose", "--data", xor, "--model", thl, "--mode", "shl", "--out", out_path)[0] == 2


def test_plot(xor, capsys, tmp_path):
    bare, with_model, model = tmp_path / "a.svg", tmp_path / "b.svg", tmp_path / "m.json"
    assert run(capsys, "plot", "--data", xor, "--out", bare)[0] == 0
    run(capsys, "construct", "--data", xor, "--method", "shl", "--out", model)
    assert run(capsys, "plot", "--data", xor, "--model", model, "--out", with_model)[0] == 0
    count = lambda p: len(list(ET.parse(p).getroot().iter(f"{SVG}path")))
    assert count(with_model) > count(bare)

    blobs = tmp_path / "b3.csv"
    run(capsys, "gen", "blobs", "--dim", 3, "--out", blobs)
    code, _, err = run(capsys, "plot", "--data", blobs, "--out", tmp_path / "x.svg")
    assert code == 1 and json.loads(err)["error"] == "DimensionMismatch"


def test_verify(capsys, monkeypatch):
    code, out, _ = run(capsys, "verify", "--suite", "descent", "--seed", 0)
    assert code == 0 and out.count("PASS") == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["verify", "--suite", "nope"])
    assert info.value.code == 2
    capsys.readouterr()

    # Corrupt the sandwich bounds: the surrogate suite must notice.
    real = train.thl_bounds
    monkeypatch.setattr(train, "thl_bounds", lambda *a: tuple(v + 1e-3 for v in real(*a)))
    code, out, err = run(capsys, "verify", "--suite", "surrogates", "--seed", 0)
    assert code == 1 and "FAIL" in out
    assert json.loads(err)["failed"]


def test_module_entry_point(xor):
    proc = subprocess.run([sys.executable, "-m", "scrn", "check", "--data", str(xor), "--mode", "linear"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["separable"] is False


def test_verify_all_passes(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "all", "--seed", 0)
    assert code == 0
    assert out.count("PASS") == 10 and "FAIL" not in out
