import json
import subprocess
import sys
from fractions import Fraction
from importlib.resources import files

import pytest

from gkannan.cli import main

DATA = files("gkannan") / "data"
SPACE = str(DATA / "three_point_space.json")
EX1 = str(DATA / "example1_map.json")
EX2 = str(DATA / "example2_map.json")
EX3 = str(DATA / "example3_a5_map.json")
EX4 = str(DATA / "example4_map.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def structured(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "structured")
    return code, json.loads(out), err


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def test_validate_ok(capsys):
    assert run(capsys, "validate", SPACE)[:2] == (0, "ok\n")


def test_validate_reports_triangle(tmp_path, capsys):
    bad = write(tmp_path, "bad.json", {"labels": ["x", "y", "z"],
                                       "dist": [[0, 1, 3], [1, 0, 1], [3, 1, 0]]})
    code, doc, _ = structured(capsys, "validate", bad)
    assert code == 1 and not doc["ok"]
    assert {"axiom": "triangle", "points": ["x", "y", "z"], "lhs": "3", "rhs": "2"} in doc["violations"]


@pytest.mark.parametrize("text", ["{not json", '{"labels": ["x"]}', '[1, 2]'])
def test_validate_malformed(tmp_path, capsys, text):
    assert run(capsys, "validate", write(tmp_path, "m.json", text))[0] == 2


def test_missing_file(capsys):
    code, _, err = run(capsys, "validate", "/nonexistent/space.json")
    assert code == 2 and "error" in err


def test_classify_example1(capsys):
    code, doc, _ = structured(capsys, "classify", SPACE, EX1)
    assert code == 0
    assert doc["lambda_gkannan"] == "1/2" and doc["lambda_kannan"] == "inf"
    assert doc["is_kannan"] is False and doc["kind"] == "gkannan-not-kannan"
    assert doc["witness_triple"] == ["x", "y", "z"]
    assert any("no finite lambda" in n for n in doc["notes"])


def test_classify_example2(capsys):
    code, doc, _ = structured(capsys, "classify", SPACE, EX2)
    assert code == 0 and doc["lambda_gkannan"] == "1/3"


def test_classify_grid(capsys):
    code, doc, _ = structured(capsys, "classify", EX3, "--grid", "257")
    assert code == 0 and doc["bounds"] == "grid-lower"
    lower, upper = Fraction(doc["lambda_gkannan"]), Fraction(doc["gkannan_upper"])
    assert abs(lower - Fraction(1, 2)) <= Fraction(1, 200)
    assert lower <= Fraction(1, 2) <= upper


def test_classify_human_output(capsys):
    code, out, _ = run(capsys, "classify", SPACE, EX1)
    assert code == 0 and "lambda_gkannan" in out and "1/2" in out


def test_classify_needs_grid_for_piecewise(capsys):
    assert run(capsys, "classify", EX3)[0] == 2


def test_classify_two_points(tmp_path, capsys):
    sp = write(tmp_path, "s.json", {"labels": ["p", "q"], "dist": [[0, 1], [1, 0]]})
    mp = write(tmp_path, "m.json", {"table": {"p": "p", "q": "p"}})
    code, _, err = run(capsys, "classify", sp, mp)
    assert code == 1 and "|X| >= 3" in err


def test_classify_parallel_matches(capsys):
    a = structured(capsys, "classify", EX4, "--grid", "65")[1]
    b = structured(capsys, "classify", EX4, "--grid", "65", "--workers", "3")[1]
    assert a == b


def test_solve_example1(capsys):
    code, doc, _ = structured(capsys, "solve", SPACE, EX1, "--start", "z")
    assert code == 0
    (r,) = doc["results"]
    assert r["fixed_point"] == "x" and r["steps"] == 1
    assert r["certificate"]["alpha"] == "2/3"


def test_solve_example2(capsys):
    code, out, _ = run(capsys, "solve", SPACE, EX2, "--start", "z")
    assert code == 3 and "(x, y)" in out


def test_solve_budget(tmp_path, capsys):
    sp = write(tmp_path, "s.json", {"labels": ["a", "b", "c"],
                                    "dist": [[0, 1, 2], [1, 0, 1], [2, 1, 0]]})
    mp = write(tmp_path, "m.json", {"table": {"a": "b", "b": "c", "c": "c"}})
    assert run(capsys, "solve", sp, mp, "--start", "a", "--budget", "1")[0] == 4
    assert run(capsys, "solve", sp, mp, "--start", "a")[0] == 0


def test_solve_identity(tmp_path, capsys):
    mp = write(tmp_path, "id.json", {"table": {"x": "x", "y": "y", "z": "z"}})
    code, doc, _ = structured(capsys, "solve", SPACE, mp)
    assert code == 0 and doc["worst_steps"] == 0


def test_solve_unknown_start(capsys):
    assert run(capsys, "solve", SPACE, EX1, "--start", "w")[0] == 2


def test_solve_grid_map(capsys):
    code, doc, _ = structured(capsys, "solve", EX3, "--grid", "17", "--start", "1")
    assert code == 0 and doc["results"][0]["fixed_point"] == "0"


@pytest.mark.parametrize("which", ["1", "2"])
def test_reproduce_examples(capsys, which):
    code, doc, _ = structured(capsys, "reproduce", which)
    assert code == 0 and doc["ok"]


def test_reproduce_all(capsys):
    code, out, _ = run(capsys, "reproduce", "all")
    assert code == 0 and "FAIL" not in out


def test_hunt_gkannan_not_kannan(tmp_path, capsys):
    out = tmp_path / "store"
    code, doc, _ = structured(capsys, "hunt", "--kind", "gkannan-not-kannan", "--budget", "1000",
                              "--out", str(out))
    assert code == 0 and doc["records"]["gkannan-not-kannan"] >= 1
    assert (out / "manifest.json").exists()
    assert all((out / f).exists() for f in doc["files"])


def test_hunt_falsify(capsys):
    code, doc, _ = structured(capsys, "hunt", "--kind", "falsify-theorem1", "--budget", "500",
                              "--policy", "descent")
    assert code == 0 and doc["counterexamples"] == 0


def test_hunt_rerun_is_identical(capsys):
    argv = ("hunt", "--seed", "5", "--budget", "300", "--sizes", "4,5")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_manifest_is_deterministic(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        run(capsys, "classify", SPACE, EX1, "--manifest", str(p))
    a, b = (json.loads(p.read_text()) for p in paths)
    assert a == b
    assert a["command"] == "classify" and a["parameters"]["exit_code"] == 0
    assert set(a["inputs"]) == {SPACE, EX1} and len(a["output_digest"]) == 64


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gkannan", "validate", SPACE],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "ok\n"
