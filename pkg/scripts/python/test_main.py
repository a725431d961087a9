#!/usr/bin/env python3
"""
Command-line tests: exit codes, report contents and determinism.
"""

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from main import EXIT_ERROR, EXIT_OK, main  # noqa: E402
from report_io import REPORT_SCHEMA  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[2] / "inputs" / "fixtures"


def _run(tmp_path, *argv, name="report.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out), "--quiet"])
    return code, (json.loads(out.read_text(encoding="utf-8")) if out.exists() else None)


def test_report_for_half_one_plus_z(tmp_path):
    code, report = _run(tmp_path, "report", str(FIXTURES / "b_half_one_plus_z.json"))
    assert code == EXIT_OK
    assert report["schema"] == REPORT_SCHEMA
    assert report["verdict"] == "NotQuasiExtreme"
    assert report["a0"] == pytest.approx(0.5, abs=1e-6)
    assert report["residuals"]["isometry"] <= 1e-8
    assert report["residuals"]["oracleCoefficients"] <= 1e-6
    coeffs = {tuple(e["alpha"]): e["re"] for e in report["aCoefficients"]["coeffs"]}
    assert coeffs[(0,)] == pytest.approx(0.5, abs=1e-6)
    assert coeffs[(1,)] == pytest.approx(-0.5, abs=1e-6)
    assert report["input"]["nodes"]["seed"] == 42
    assert report["input"]["config"]["degree"] == 20
    assert "inconclusive-cross-check" not in report["flags"]
    assert report["evidence"]["constantsCriterion"] == "hb"


def test_report_for_z_is_quasi_extreme(tmp_path):
    code, report = _run(tmp_path, "report", str(FIXTURES / "b_z.json"), "--tables", str(tmp_path / "run.csv"))
    assert code == EXIT_OK
    assert report["verdict"] == "QuasiExtreme"
    assert report["a0"] == 0.0
    assert report["aCoefficients"] is None
    assert (tmp_path / "run_traces.csv").exists()


@pytest.mark.parametrize("fixture", ["b_non_contractive.json", "b_constant.json", "missing.json"])
def test_report_refuses_bad_input(tmp_path, fixture):
    code, report = _run(tmp_path, "report", str(FIXTURES / fixture))
    assert code == EXIT_ERROR
    assert report is None


def test_refusal_goes_to_stderr(capsys):
    code = main(["report", str(FIXTURES / "b_non_contractive.json"), "--quiet"])
    captured = capsys.readouterr()
    assert code == EXIT_ERROR
    assert "❌ ERROR: ContractivityError" in captured.err
    assert captured.out == ""


def test_report_rejects_unknown_override(tmp_path):
    code, _ = _run(tmp_path, "report", str(FIXTURES / "b_half_z.json"), "--tol", "colour=3")
    assert code == EXIT_ERROR


def test_report_is_deterministic(tmp_path):
    args = ("report", str(FIXTURES / "b_half_z.json"), "--seed", "7")
    _run(tmp_path, *args, name="first.json")
    _run(tmp_path, *args, name="second.json")
    first = (tmp_path / "first.json").read_bytes()
    assert first == (tmp_path / "second.json").read_bytes()
    assert json.loads(first)["seed"] == 7


def test_text_report_on_stdout(capsys):
    code = main(["report", str(FIXTURES / "b_z.json"), "--format", "text"])
    captured = capsys.readouterr()
    assert code == EXIT_OK
    assert "QuasiExtreme" in captured.out
    assert "Analyzing" in captured.err


def test_fock_shift(tmp_path):
    code, report = _run(
        tmp_path,
        "fock-shift",
        "--a",
        str(FIXTURES / "fock_A_word12.json"),
        "--b",
        str(FIXTURES / "fock_B_L1.json"),
    )
    assert code == EXIT_OK
    assert report["v"] == [1, 2]
    assert report["shiftedAtEmpty"] == pytest.approx(0.5)
    assert report["lambdaMinBefore"] == pytest.approx(0.5)
    assert report["drop"] <= 1e-10
    assert report["lengths"] == {"before": 4, "after": 2}


def test_fock_shift_defaults_b_to_zero(tmp_path):
    code, report = _run(tmp_path, "fock-shift", "--a", str(FIXTURES / "fock_B_L1.json"))
    assert code == EXIT_OK
    assert report["v"] == [1]
    assert report["input"]["B"]["coeffs"] == []
