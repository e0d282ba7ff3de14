import json
import sys

import pytest
from typer.testing import CliRunner

from client import app as cli
from engine.config_manager import config_manager
from engine.formats import read_report

runner = CliRunner()


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    monkeypatch.setattr(config_manager, "env_path", str(tmp_path / ".env"))
    for key in ("NORMCHAR_ALPHA", "NORMCHAR_SAMPLE_SIZE", "NORMCHAR_WORKERS", "NORMCHAR_DEFAULT_ORDER"):
        monkeypatch.delenv(key, raising=False)
    monkeypatch.setenv("NORMCHAR_PERMUTATIONS", "99")


def invoke(*args):
    return runner.invoke(cli.app, [str(a) for a in args])


def test_convert_moments(fixtures_dir, tmp_path):
    out = tmp_path / "r.txt"
    result = invoke("convert", fixtures_dir / "moments_gaussian.txt", "--from", "moments", "-o", out)
    assert result.exit_code == 0
    assert out.read_text() == "0,1,0,0\n"


def test_convert_cumulants(fixtures_dir, tmp_path):
    out = tmp_path / "m.txt"
    result = invoke("convert", fixtures_dir / "cumulants_poisson.txt", "--from", "cumulants", "-o", out)
    assert result.exit_code == 0
    assert out.read_text() == "1,2,5,15\n"


def test_convert_writes_a_conversion_report(fixtures_dir, tmp_path):
    out = tmp_path / "conversion.json"
    result = invoke("convert", fixtures_dir / "moments_gaussian.txt", "--from", "moments", "--report", out)
    assert result.exit_code == 0
    written = read_report(out)
    assert written.kind == "conversion"
    assert written.report["to"] == "cumulants"
    assert written.report["cumulants"] == ["0", "1", "0", "0"]
    assert written.report["order"] == 4
    again = tmp_path / "again.json"
    invoke("convert", fixtures_dir / "moments_gaussian.txt", "--from", "moments", "--report", again)
    assert read_report(again).input_digest == written.input_digest


def test_convert_failures(fixtures_dir, tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    assert invoke("convert", empty, "--from", "moments").exit_code == 1
    assert invoke("convert", tmp_path / "missing.txt", "--from", "moments").exit_code == 1
    assert invoke("convert", fixtures_dir / "moments_gaussian.txt", "--from", "logs").exit_code == 1
    assert invoke("convert", fixtures_dir / "moments_gaussian.txt", "--from", "moments", "-k", "9").exit_code == 1


def test_characterize_gaussian_writes_report(fixtures_dir, tmp_path):
    out = tmp_path / "report.json"
    result = invoke("characterize", "--scenario", fixtures_dir / "gaussian.json", "-o", out)
    assert result.exit_code == 0
    report = read_report(out)
    assert report.kind == "characterization"
    assert report.report["verdict"] == "Characterized"

    again = tmp_path / "again.json"
    invoke("characterize", "--scenario", fixtures_dir / "gaussian.json", "-o", again)
    assert read_report(again).input_digest == report.input_digest


def test_characterize_skewed_is_negative(fixtures_dir, tmp_path):
    out = tmp_path / "report.json"
    result = invoke("characterize", "--scenario", fixtures_dir / "skewed.json", "-o", out)
    assert result.exit_code == 2
    violations = json.loads(out.read_text())["report"]["violations"]
    assert violations[0]["witness"] == "a^3"


def test_characterize_operational_errors(fixtures_dir, tmp_path):
    assert invoke("characterize", "--scenario", tmp_path / "nope.json").exit_code == 1
    assert invoke("characterize", "--scenario", fixtures_dir / "degenerate.json").exit_code == 1
    assert invoke("characterize", "--scenario", fixtures_dir / "gaussian.json", "-k", "2").exit_code == 1


def test_characterize_modes(fixtures_dir):
    assert invoke("characterize", "--scenario", fixtures_dir / "prop2_gaussian.json", "--prop2").exit_code == 0
    assert invoke("characterize", "--scenario", fixtures_dir / "prop2_xxy.json", "--prop2").exit_code == 2
    assert invoke("characterize", "--scenario", fixtures_dir / "vector_gaussian.json", "--vector", "2").exit_code == 0
    assert invoke("characterize", "--scenario", fixtures_dir / "vector_gaussian.json", "--vector", "1").exit_code == 1
    assert invoke(
        "characterize", "--scenario", fixtures_dir / "vector_gaussian.json", "--vector", "2", "--prop2"
    ).exit_code == 1


def test_simulate_needs_three_angles():
    result = invoke("simulate", "--left", "normal", "--right", "normal", "--seed", 1, "--angles", "0,90", "--n", 1000)
    assert result.exit_code == 1


def test_simulate_unknown_side():
    result = invoke("simulate", "--left", "cauchy", "--right", "normal", "--seed", 1, "--n", 1000)
    assert result.exit_code == 1


def test_simulate_small_run_is_reproducible(fixtures_dir, tmp_path):
    reports = []
    for name in ("first.json", "second.json"):
        out = tmp_path / name
        result = invoke(
            "simulate", "--left", fixtures_dir / "side_normal_y.json", "--right", "normal",
            "--seed", 7, "--n", 1000, "-o", out,
        )
        assert result.exit_code in (0, 2)
        reports.append(read_report(out))
    assert reports[0] == reports[1]
    body = reports[0].report
    assert body["method"] == "permutation"
    assert len(body["pairs"]) == 10


def test_reduce(tmp_path):
    samples = tmp_path / "x.csv"
    samples.write_text("X1,X2,X3\n0.5,-1,2\n1.25,0,-0.75\n3,1,1\n")
    assert invoke("reduce", "--coeffs", "1,-1/2,2", "--samples", samples).exit_code == 0
    assert invoke("reduce", "--coeffs", "1,-1/2,2", "--samples", samples, "--exact", "--split", 1).exit_code == 0
    assert invoke("reduce", "--coeffs", "1,2", "--samples", samples).exit_code == 1
    assert invoke("reduce", "--coeffs", "1,2,3", "--samples", samples, "--split", 4).exit_code == 1


def test_reduce_on_selected_columns(tmp_path):
    samples = tmp_path / "x.csv"
    samples.write_text("X1,W,X2\n0.5,9,-1\n1.25,9,0\n3,9,1\n")
    out = tmp_path / "reduction.json"
    result = invoke("reduce", "--coeffs", "1,2", "--samples", samples, "--columns", "X2,X1", "--exact", "-o", out)
    assert result.exit_code == 0
    assert read_report(out).report["columns"] == ["X2", "X1"]
    assert invoke("reduce", "--coeffs", "1,2", "--samples", samples, "--columns", "X1,Q").exit_code == 1


def test_config_get_and_unset():
    assert invoke("config", "set", "workers", "3").exit_code == 0
    result = invoke("config", "get", "workers")
    assert result.exit_code == 0
    assert "NORMCHAR_WORKERS=3" in result.output
    assert invoke("config", "unset", "workers").exit_code == 0
    assert config_manager.get_all_keys() == {}
    assert "not set" in invoke("config", "get", "workers").output


def test_config_set_and_show(monkeypatch):
    result = invoke("config", "set", "alpha", "0.2")
    assert result.exit_code == 0
    assert config_manager.get_all_keys() == {"NORMCHAR_ALPHA": "0.2"}
    assert invoke("config", "set", "alpha", "2").exit_code == 1
    assert config_manager.get_all_keys() == {"NORMCHAR_ALPHA": "0.2"}
    assert invoke("config", "show").exit_code == 0
    assert invoke("config", "reset").exit_code == 0
    assert config_manager.get_all_keys() == {}


def test_version():
    result = invoke("version")
    assert result.exit_code == 0
    assert "normchar" in result.output


def test_main_maps_usage_errors_to_one(monkeypatch):
    monkeypatch.setattr(sys, "argv", ["normchar", "convert"])
    with pytest.raises(SystemExit) as exit_info:
        cli.main()
    assert exit_info.value.code == 1


def test_main_keeps_negative_exit(monkeypatch, fixtures_dir):
    monkeypatch.setattr(sys, "argv", ["normchar", "characterize", "--scenario", str(fixtures_dir / "skewed.json")])
    with pytest.raises(SystemExit) as exit_info:
        cli.main()
    assert exit_info.value.code == 2
