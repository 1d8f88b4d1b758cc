import json

import pdfplumber
import pytest

import suites
from main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main


def _read(path):
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def test_reports_are_reproducible(fixture_path, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert main([fixture_path("two_state_T1"), "--seed", "0", "--out", str(first)]) == EXIT_OK
    assert main([fixture_path("two_state_T1"), "--seed", "0", "--out", str(second), "--threads", "2"]) == EXIT_OK
    assert _read(first / "report.json") == _read(second / "report.json")

    report = json.loads(_read(first / "report.json"))
    assert report["format_version"] == 1
    assert report["summary"]["fail"] == 0
    assert [c["id"] for c in report["checks"]] == [spec.id for spec in suites.REGISTRY]
    assert "elapsed" not in _read(first / "report.json")
    assert "Summary:" in _read(first / "report.txt")


def test_pdf_report_mirrors_the_checks(fixture_path, tmp_path):
    out = tmp_path / "out"
    assert main([fixture_path("binary_T2"), "--suite", "space", "--out", str(out)]) == EXIT_OK
    with pdfplumber.open(str(out / "report.pdf")) as pdf:
        text = "\n".join(page.extract_text() or "" for page in pdf.pages)
    assert "Summary" in text
    assert "space.decomposition" in text


def test_broken_model_exits_with_failure(fixture_path, capsys):
    assert main([fixture_path("broken_T2")]) == EXIT_FAILURE
    out = capsys.readouterr().out
    assert "consistency.process" in out
    assert "witness" in out


def test_seed_from_the_command_line(fixture_path, tmp_path):
    out = tmp_path / "seeded"
    main([fixture_path("two_state_T1"), "--suite", "space", "--seed", "11", "--out", str(out)])
    assert json.loads(_read(out / "report.json"))["seed"] == 11


@pytest.mark.parametrize("suite", ["", "everything"])
def test_bad_suite_is_a_usage_error(fixture_path, capsys, suite):
    assert main([fixture_path("two_state_T1"), "--suite", suite]) == EXIT_USAGE
    assert "known:" in capsys.readouterr().err


def test_missing_model_is_a_usage_error(tmp_path, capsys):
    assert main([str(tmp_path / "absent.json")]) == EXIT_USAGE
    assert "file not found" in capsys.readouterr().err
    assert main([]) == EXIT_USAGE


def test_invalid_model_is_a_usage_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"space": {"states": ["a"]}}', encoding="utf-8")
    assert main([str(path)]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "space.horizon: missing" in err
    assert "$.assets: missing" in err


def test_explain(capsys):
    assert main(["--explain", "consistency.joint"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("consistency.joint  [consistency]")
    assert "procedure:" in out


def test_explain_unknown_id(capsys):
    assert main(["--explain", "axioms.everything"]) == EXIT_USAGE
    assert "valid ids" in capsys.readouterr().err
