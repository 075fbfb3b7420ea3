"""Tests for CLI commands."""

import json
from unittest.mock import patch

import pytest

from pme_lab.cli import (
    _overrides,
    build_parser,
    cmd_audit,
    cmd_regions,
    cmd_simulate,
    cmd_thresholds,
    main,
)
from tests.helpers import make_cli_args


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep PME_LAB_* variables from leaking into the commands."""
    monkeypatch.delenv("PME_LAB_OUT", raising=False)
    monkeypatch.delenv("PME_LAB_LOG_LEVEL", raising=False)


class TestParser:
    """Tests for argument parsing and override mapping."""

    def test_overrides_map_to_sections(self):
        """Only options that were given become overrides."""
        args = make_cli_args(m=2.0, cells=[8, 8], drift="rotation", fields=False)
        assert _overrides(args) == {
            "model": {"m": 2.0},
            "grid": {"cells": [8, 8]},
            "drift": {"preset": "rotation"},
            "output": {"fields": False},
        }

    def test_parse_audit_command(self):
        """Audit options land on the namespace."""
        args = build_parser().parse_args(
            ["audit", "--preset", "divfree-rotation", "--m", "2", "--checks", "energy", "speed", "--refinement"]
        )
        assert args.command == "audit"
        assert args.m == 2.0
        assert args.checks == ["energy", "speed"]
        assert args.refinement is True
        assert args.fields is None

    def test_no_chemotaxis_flag(self):
        """--no-chemotaxis stores False, absence leaves None."""
        parser = build_parser()
        assert parser.parse_args(["ks", "--no-chemotaxis"]).chemotaxis is False
        assert parser.parse_args(["ks"]).chemotaxis is None


class TestCmdThresholds:
    """Tests for cmd_thresholds."""

    def test_writes_thresholds(self, tmp_path):
        """A complete invocation exits 0 and writes the JSON and manifest."""
        args = make_cli_args(m=2.0, d=3, q=2.0, out=str(tmp_path))
        with patch("builtins.print") as mock_print:
            result = cmd_thresholds(args)
        assert result == 0
        payload = json.loads((tmp_path / "thresholds.json").read_text())
        assert payload["thresholds"]["q_star"] == pytest.approx(8.0 / 3.0)
        assert (tmp_path / "manifest.json").is_file()
        mock_print.assert_any_call(f"Wrote 3 artifacts to {tmp_path}")

    def test_missing_dimension(self, tmp_path, capsys):
        """Without d the command is a configuration error."""
        result = cmd_thresholds(make_cli_args(m=2.0, out=str(tmp_path / "out")))
        assert result == 2
        assert "Configuration error" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()


class TestCmdRegions:
    """Tests for cmd_regions."""

    def test_vertex_e(self, tmp_path):
        """The moderate-m diagram at m = 1.5, d = 3 has E = (0.25, 0.5)."""
        args = make_cli_args(m=1.5, d=3, figure="ac-moderate-m", resolution=10, out=str(tmp_path))
        with patch("builtins.print") as mock_print:
            result = cmd_regions(args)
        assert result == 0
        mock_print.assert_any_call("  E = (0.25, 0.5)")
        assert (tmp_path / "region_points.csv").is_file()


class TestCmdSimulate:
    """Tests for cmd_simulate."""

    def test_malformed_config(self, tmp_path, capsys):
        """A YAML syntax error exits 2 with the line and writes nothing."""
        config = tmp_path / "bad.yaml"
        config.write_text("model:\n  m: [2\n")
        out = tmp_path / "out"
        result = cmd_simulate(make_cli_args(config=config, out=str(out)))
        assert result == 2
        err = capsys.readouterr().err
        assert "Configuration error" in err
        assert "line" in err
        assert not out.exists()

    def test_numerical_failure(self, tmp_path, capsys):
        """Errors from the solvers exit 1 with their own message."""
        config = tmp_path / "fast.yaml"
        config.write_text(
            "grid:\n  cells: [16]\ntime:\n  horizon: 0.4\n  steps: 4\n  subintervals: 2\n"
            "drift:\n  preset: constant\n  vector: [1.0]\n"
        )
        out = tmp_path / "out"
        result = cmd_simulate(make_cli_args(config=config, out=str(out)))
        assert result == 1
        assert "Simulation error:" in capsys.readouterr().err
        assert not out.exists()

    def test_env_sets_output_directory(self, tmp_path, monkeypatch):
        """PME_LAB_OUT is used when --out is not given."""
        monkeypatch.setenv("PME_LAB_OUT", str(tmp_path / "env"))
        args = make_cli_args(cells=[16], steps=4, horizon=0.004, subintervals=2, fields=False)
        with patch("builtins.print"):
            assert cmd_simulate(args) == 0
        assert (tmp_path / "env" / "timeseries.csv").is_file()


class TestCmdAudit:
    """Tests for cmd_audit exit codes."""

    def test_passing_audit_exits_zero(self, tmp_path):
        """All enabled audits passing gives exit 0."""
        args = make_cli_args(
            cells=[16], steps=4, horizon=0.004, subintervals=2, checks=["energy"], out=str(tmp_path)
        )
        with patch("builtins.print") as mock_print:
            assert cmd_audit(args) == 0
        mock_print.assert_any_call("All 1 audits passed")


class TestMain:
    """Tests for the main entry point."""

    def test_bad_log_level(self, capsys):
        """An unknown log level exits 2 before any command runs."""
        assert main(["--log-level", "chatty", "thresholds", "--m", "2", "--d", "3"]) == 2
        assert "PME_LAB_LOG_LEVEL" in capsys.readouterr().err

    def test_dispatch(self, tmp_path):
        """main routes to the command handler."""
        with patch("builtins.print"):
            code = main(["thresholds", "--m", "2", "--d", "3", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "thresholds.json").is_file()
