import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from symtomo.cli import run


def _report(path):
    return json.loads(path.read_text())


def test_verify_thm14_spherocylinder(tmp_path):
    out = tmp_path / "r.json"
    code = run(["verify", "thm14", "--body", "spherocylinder", "--p", "0,0,0.3", "--seed", "1",
                "--out", str(out)])
    rep = _report(out)
    assert code == 0 and rep["verdict"] == "pass"
    d = np.array(rep["artifacts"]["axis"]["direction"])
    assert np.arccos(min(1.0, abs(d[2]) / np.linalg.norm(d))) < 1e-6


def test_detect_revolution_cube_fails(tmp_path):
    out = tmp_path / "r.json"
    assert run(["detect", "revolution", "--body", "cube", "--p", "0,0,0", "--seed", "1", "--out", str(out)]) == 2
    assert _report(out)["verdict"] == "fail"


def test_verify_lem07(tmp_path):
    out = tmp_path / "r.json"
    assert run(["verify", "lem07", "--a", "3,3,3,7", "--k", "1", "--seed", "1", "--out", str(out)]) == 0


@pytest.mark.parametrize("argv", [
    ["detect", "central", "--body", "ball"],
    ["verify", "lem07", "--a", "1,2,3,4"],
    ["verify", "thm14", "--body", "ball", "--p", "0,0,0"],
])
def test_missing_seed_is_an_error(argv, capsys):
    assert run(argv) == 1
    assert "seed" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["section", "--body", "nosuchbody", "--H", "0,0,1:0"],
    ["section", "--body", "ball", "--H", "0,1:0"],
    ["verify", "thm14", "--body", "ball", "--p", "0,0", "--seed", "1"],
    ["frobnicate"],
])
def test_usage_errors(argv):
    assert run(argv) == 1


def test_identical_argv_gives_identical_bytes(tmp_path):
    texts = []
    out = tmp_path / "r.json"
    for _ in range(2):
        run(["detect", "central", "--body", "cube", "--seed", "4", "--deterministic", "--out", str(out)])
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]


def test_exit_code_matches_verdict(tmp_path):
    for argv in (["verify", "lem07", "--a", "2,2,5,5", "--seed", "0"],
                 ["verify", "lem03", "--body", "ellipsoid", "--params", '{"semi_axes": [1, 2]}', "--seed", "0"],
                 ["detect", "central", "--body", "ball", "--seed", "0"]):
        out = tmp_path / "r.json"
        code = run(argv + ["--out", str(out)])
        assert code == {"pass": 0, "fail": 2, "inconclusive": 3}[_report(out)["verdict"]]


def test_section_exports(tmp_path):
    out, c, s = tmp_path / "r.json", tmp_path / "s.csv", tmp_path / "s.svg"
    assert run(["section", "--body", "cube", "--H", "1,1,1:0", "--out", str(out), "--csv", str(c),
                "--svg", str(s)]) == 0
    rows = list(csv.reader(c.open()))
    assert rows[0] == ["vertex", "y1", "y2"] and len(rows) > 10
    assert s.read_text().startswith("<svg") or "<svg" in s.read_text()


def test_family_csv(tmp_path):
    out, c = tmp_path / "r.json", tmp_path / "f.csv"
    assert run(["family", "--body", "spherocylinder", "--p", "0,0,0", "--count", "5", "--out", str(out),
                "--csv", str(c)]) == 0
    assert next(csv.reader(c.open())) == ["tau", "vertex", "y1", "y2"]


def test_gallery_list(capsys):
    assert run(["gallery", "list"]) == 0
    assert "spherocylinder" in capsys.readouterr().out


def test_console_script_runs():
    r = subprocess.run([sys.executable, "-m", "symtomo.cli", "verify", "lem07", "--a", "1,2,3,4", "--seed", "0",
                        "--deterministic"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["verdict"] == "pass"
