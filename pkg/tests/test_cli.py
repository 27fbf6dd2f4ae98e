import io
import json
import subprocess
import sys

import pytest

from backdoors.cli import BUDGET, NOT_FOUND, OK, USAGE, run_command


def run(capsys, argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = run_command(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def gen(capsys, *argv):
    code, out, _ = run(capsys, ["gen", *argv])
    assert code == OK
    return out


def test_intro_pipeline(capsys, monkeypatch):
    text = gen(capsys, "intro", "-n", "5")
    assert text.startswith("p cnf 16 6")
    code, out, _ = run(capsys, ["detect", "--mode", "strong", "--class", "horn,2cnf", "-k", "1"], text, monkeypatch)
    doc = json.loads(out)
    assert code == OK and doc["found"] and doc["backdoor"] == [1]
    assert doc["witnesses"] == {"1=0": "horn", "1=1": "2cnf"}
    for key in ("nodes", "leaves", "max_depth", "elapsed_ms", "mode", "class"):
        assert key in doc


def test_detect_not_found_and_oracle(capsys, tmp_path):
    path = tmp_path / "f.cnf"
    path.write_text(gen(capsys, "intro", "-n", "4"))
    code, out, _ = run(capsys, ["detect", str(path), "--class", "horn", "-k", "3"])
    assert code == NOT_FOUND and not json.loads(out)["found"]
    code, out, _ = run(capsys, ["detect", str(path), "--class", "horn", "-k", "4", "--oracle"])
    assert code == OK and len(json.loads(out)["backdoor"]) == 4
    code, out, _ = run(capsys, ["detect", str(path), "--class", "2cnf", "-k", "1", "--mode", "weak"])
    assert code == OK


def test_classify_and_verify(capsys, tmp_path):
    path = tmp_path / "f.cnf"
    path.write_text("p cnf 3 2\n1 2 3 0\n-1 -2 -3 0\n")
    code, out, _ = run(capsys, ["classify", str(path), "--class", "horn,antihorn"])
    doc = json.loads(out)
    assert code == NOT_FOUND and doc["violations"]["horn"] == [1, 2, 3]
    code, out, _ = run(capsys, ["verify", str(path), "--class", "horn,antihorn", "--backdoor", ""])
    assert code == NOT_FOUND and "falsifying" in json.loads(out)
    # either value of 1 satisfies one clause and leaves the other
    code, out, _ = run(capsys, ["verify", str(path), "--class", "horn,antihorn", "--backdoor", "1"])
    assert code == OK and json.loads(out)["witnesses"] == {"1=0": "antihorn", "1=1": "horn"}


def test_solve(capsys, tmp_path):
    path = tmp_path / "u.cnf"
    path.write_text("p cnf 1 2\n1 0\n-1 0\n")
    code, out, _ = run(capsys, ["solve", str(path), "--class", "horn", "--backdoor", "1"])
    assert code == NOT_FOUND and json.loads(out)["status"] == "UNSAT"
    path.write_text(gen(capsys, "intro", "-n", "3"))
    code, out, _ = run(capsys, ["solve", str(path), "--class", "horn,2cnf", "--backdoor", "1"])
    assert code == OK and json.loads(out)["status"] == "SAT"
    code, out, err = run(capsys, ["solve", str(path), "--class", "horn,2cnf", "--backdoor", "5"])
    assert code == NOT_FOUND and json.loads(err)["error"] == "not-a-backdoor"


def test_dichotomy(capsys):
    code, out, _ = run(capsys, ["dichotomy", "--class", "horn,2cnf"])
    assert code == OK and out.strip() == "FPT"
    code, out, _ = run(capsys, ["dichotomy", "--class", "horn,antihorn"])
    assert out.strip().startswith("W[2]-hard")
    code, out, _ = run(capsys, ["dichotomy", "--all"])
    assert len(out.strip().splitlines()) == 31


def test_usage_errors(capsys):
    code, _, err = run(capsys, ["frobnicate"])
    assert code == USAGE and json.loads(err)["error"] == "usage"
    code, _, err = run(capsys, ["detect", "/nonexistent.cnf", "--class", "horn", "-k", "1"])
    assert code == USAGE
    code, _, err = run(capsys, ["dichotomy"])
    assert code == USAGE


def test_bad_input(capsys, tmp_path):
    path = tmp_path / "bad.cnf"
    path.write_text("p cnf 2 1\n1 x 0\n")
    code, _, err = run(capsys, ["classify", str(path), "--class", "horn"])
    assert code == USAGE and json.loads(err)["error"] == "input"


def test_csp_detect_and_budget(capsys, tmp_path):
    path = tmp_path / "g.json"
    path.write_text(gen(capsys, "partition-gap", "-n", "6"))
    code, out, _ = run(capsys, ["detect", str(path), "--props", "majority", "-k", "1"])
    assert code == OK and json.loads(out)["backdoor"] == ["x"]
    path.write_text(gen(capsys, "gadget", "--c", "majority", "-k", "5"))
    code, _, err = run(capsys, ["detect", str(path), "--props", "malcev", "-k", "1"])
    assert code == BUDGET and "--oracle" in json.loads(err)["hint"]


def test_compare_partition(capsys, tmp_path):
    path = tmp_path / "g.json"
    path.write_text(gen(capsys, "partition-gap", "-n", "6"))
    code, out, _ = run(capsys, ["compare-partition", str(path), "--props", "majority"])
    (row,) = json.loads(out)
    assert code == OK and row["strong"] == 1 and row["partition_idempotent"] == 6


def test_gen_families(capsys, tmp_path):
    sets = tmp_path / "h.txt"
    sets.write_text("1\na b c\nb c d\n")
    for argv in (
        ["obstruction", "--from", "horn", "--to", "2cnf"],
        ["hs-strong", str(sets)],
        ["hs-weak", str(sets), "--s", "horn"],
        ["hs-csp-boolean", str(sets), "--props", "majority"],
        ["hs-csp-arity2", str(sets), "--c", "minmax"],
        ["random-cnf", "--seed", "3"],
        ["random-csp", "--seed", "3"],
        ["random-sets", "--seed", "3"],
    ):
        assert gen(capsys, *argv).strip()
    assert gen(capsys, "obstruction", "--from", "horn", "--to", "2cnf") == "p cnf 3 1\n-1 -2 -3 0\n"
    out = tmp_path / "r.cnf"
    gen(capsys, "random-cnf", "--seed", "3", "-o", str(out))
    assert out.read_text() == gen(capsys, "random-cnf", "--seed", "3")


def test_bench(capsys, tmp_path):
    (tmp_path / "a.cnf").write_text(gen(capsys, "intro", "-n", "3"))
    (tmp_path / "b.json").write_text(gen(capsys, "partition-gap", "-n", "5"))
    code, out, _ = run(capsys, ["bench", "--corpus", str(tmp_path), "-k", "1"])
    assert code == OK
    assert out.splitlines()[0].split()[:3] == ["file", "class", "algorithm"]
    assert "EXCEEDED" not in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "backdoors", "dichotomy", "--class", "0val"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "FPT"
