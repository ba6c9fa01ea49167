import json
import logging
import os

import pytest
import yaml
from click.testing import CliRunner

from main import cli


@pytest.fixture(autouse=True)
def _drop_log_handlers():
    # CliRunner swaps stderr per invocation; handlers bound to it must not outlive the test
    root = logging.getLogger()
    before = list(root.handlers)
    yield
    for handler in root.handlers[:]:
        if handler not in before:
            root.removeHandler(handler)
            handler.close()


@pytest.fixture
def runner():
    return CliRunner()


def _small_config(tmp_path) -> str:
    path = tmp_path / "small.yaml"
    path.write_text(
        "n_periods: 12\n"
        "count: 5\n"
        "xm:\n  M: \"2\"\n"
        "residual:\n  replay: false\n"
        "random:\n  strict_sc_count: 3\n  shaping_count: 3\n  max_packets: 20\n  max_flows: 3\n",
        encoding="utf-8",
    )
    return str(path)


def test_help(runner):
    result = runner.invoke(cli, [])
    assert result.exit_code == 0
    assert "spring" in result.stdout
    assert "report-all" in result.stdout


def test_spring(runner, tmp_path):
    out = str(tmp_path / "results")
    result = runner.invoke(cli, ["--out", out, "--periods", "4", "spring"])
    assert result.exit_code == 0, result.output
    for name in ("trace.csv", "figure.csv", "bundle.json", "report.json"):
        assert os.path.isfile(os.path.join(out, "spring", name))
    assert os.path.isfile(os.path.join(out, "logs", "atscalc.log"))
    with open(os.path.join(out, "spring", "report.json"), encoding="utf-8") as f:
        report = json.load(f)
    assert report["ok"] is True
    assert report["growth"]["increment"] == {"n": 7, "d": 10}
    assert "delay increment" in result.stdout


def test_prop2_reports_a_violation(runner, tmp_path):
    result = runner.invoke(cli, ["--out", str(tmp_path), "prop2"])
    assert result.exit_code == 2, result.output
    with open(tmp_path / "prop2" / "report.json", encoding="utf-8") as f:
        report = json.load(f)
    assert report["departures_match"] is True
    assert report["check"]["ok"] is False


def test_xm(runner, tmp_path):
    result = runner.invoke(cli, ["--out", str(tmp_path), "--M", "10", "xm"])
    assert result.exit_code == 0, result.output
    with open(tmp_path / "xm" / "report.json", encoding="utf-8") as f:
        report = json.load(f)
    assert report["k"] == 16
    assert report["measured_delay"] == {"n": 54, "d": 5}


def test_print_config(runner):
    result = runner.invoke(cli, ["--periods", "7", "--M", "17/2", "--print-config"])
    assert result.exit_code == 0, result.output
    doc = yaml.safe_load(result.stdout)
    assert doc["n_periods"] == 7
    assert doc["xm"]["M"] == "17/2"
    assert doc["spring"]["d"] == "17/20"


def test_bad_config_exits_with_error(runner, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("spring:\n  d: 0.85\n", encoding="utf-8")
    result = runner.invoke(cli, ["--config", str(path), "spring"])
    assert result.exit_code == 1


def test_missing_config_exits_with_error(runner, tmp_path):
    result = runner.invoke(cli, ["--config", str(tmp_path / "none.yaml"), "spring"])
    assert result.exit_code == 1


def test_invalid_parameters_exit_with_error(runner, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text('spring:\n  d: "19/20"\n  eps: "1/20"\n', encoding="utf-8")
    result = runner.invoke(cli, ["--config", str(path), "--out", str(tmp_path), "spring"])
    assert result.exit_code == 1


def test_config_from_environment(runner, tmp_path, monkeypatch):
    monkeypatch.setenv("ATSCALC_CONFIG", _small_config(tmp_path))
    result = runner.invoke(cli, ["--print-config"])
    assert result.exit_code == 0
    assert yaml.safe_load(result.stdout)["n_periods"] == 12


@pytest.mark.slow
def test_report_all(runner, tmp_path):
    out = str(tmp_path / "all")
    result = runner.invoke(cli, ["--config", _small_config(tmp_path), "--out", out, "report-all"])
    assert result.exit_code == 0, result.output
    with open(os.path.join(out, "report_all", "report.json"), encoding="utf-8") as f:
        report = json.load(f)
    assert report["ok"] is True
    codes = {c["name"]: c["exit_code"] for c in report["commands"]}
    assert codes["prop2"] == 2
    assert codes["spring"] == 0
