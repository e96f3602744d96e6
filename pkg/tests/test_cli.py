import json

import pytest

from conftest import DATA
from xbench import cli

TINY = str(DATA / "tiny.csv")


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", "--data", TINY, "--out", str(out), "--verify"]) == 0
    doc = json.loads((out / "result.json").read_text())
    assert doc["schema"] == "xbench/1" and not doc["partial"]
    assert doc["D"] == pytest.approx([25 / 12, 5 / 6], abs=1e-6)
    assert doc["classification"]["extreme_efficient"] == ["A", "B", "C"]
    header = (out / "deviations.csv").read_text().splitlines()[0]
    assert header == "dmu,face,factor,deviation"
    assert "Optimal value" in (out / "report.txt").read_text()
    text = capsys.readouterr().out
    assert "FAIL" not in text and "PASS  certificates" in text


def test_json_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["run", "--data", TINY, "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "result.json").read_bytes() == \
        (tmp_path / "b" / "result.json").read_bytes()


def test_classify(capsys):
    assert cli.main(["classify", "--data", TINY]) == 0
    assert capsys.readouterr().out.split() == ["3", "extreme-efficient", "units:", "A", "B", "C"]


def test_verify(capsys):
    assert cli.main(["verify", "--data", TINY]) == 0
    assert "oracle/MILP D sequences agree" in capsys.readouterr().out


def test_verify_declines_over_cap(capsys):
    assert cli.main(["verify", "--data", TINY, "--cap", "2"]) == cli.EXIT_INVALID
    assert "cap" in capsys.readouterr().err


def test_bad_input(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("dmu,in:a,out:b\nA,0,1\n")
    assert cli.main(["run", "--data", str(bad), "--out", str(tmp_path)]) == cli.EXIT_INVALID
    assert "strict positivity" in capsys.readouterr().err
    assert cli.main(["classify", "--data", str(tmp_path / "missing.csv")]) == cli.EXIT_INVALID
    assert cli.main(["run", "--data", TINY, "--eps-stop", "0"]) == cli.EXIT_INVALID


def test_solver_failure_exit_code(tmp_path, monkeypatch, capsys):
    from xbench import targets
    from xbench.milp import SolverError

    def boom(*a, **k):
        raise SolverError("forced failure")

    monkeypatch.setattr(targets, "run_selection", boom)
    assert cli.main(["run", "--data", TINY, "--out", str(tmp_path)]) == cli.EXIT_SOLVER
    assert "forced failure" in capsys.readouterr().err


def test_mismatch_exit_code(monkeypatch, capsys):
    from xbench import checks

    monkeypatch.setattr(checks, "certificates", lambda d, st: ["forced problem"])
    assert cli.main(["verify", "--data", TINY]) == cli.EXIT_MISMATCH
    assert "FAIL  certificates" in capsys.readouterr().out


def test_dump_lp(tmp_path):
    assert cli.main(["run", "--data", TINY, "--out", str(tmp_path / "o"),
                     "--dump-lp", str(tmp_path / "lp")]) == 0
    names = {p.name for p in (tmp_path / "lp").iterdir()}
    assert {"select_1.lp", "select_2.lp"} <= names
