"""Tests for run configuration loading and validation."""

import math

import pytest

from pme_lab.exceptions import ConfigError
from pme_lab.runner.loader import (
    RunConfig,
    build_run_config,
    dump_run_config,
    load_run_config,
    loads_run_config,
    parse_run_config,
)
from pme_lab.types import DriftStructure, ExperimentKind, FigureId, InitialPreset, SolverKind
from tests.helpers import make_run_config


class TestLoadsRunConfig:
    """Tests for parsing YAML text."""

    def test_minimal_config_uses_defaults(self):
        """Missing sections fall back to their defaults."""
        config = loads_run_config("model:\n  m: 1.5\n")
        assert config.model.m == 1.5
        assert config.q == 1.5
        assert config.kind is ExperimentKind.SIMULATE
        assert config.grid.cells == (64,)
        assert config.dimension == 1
        assert config.model.solver is SolverKind.MONOLITHIC
        assert math.isinf(config.drift.q1)

    def test_full_sections(self):
        """Every section is parsed into its typed form."""
        config = loads_run_config(
            """
experiment:
  kind: audit
  name: shear-check
grid:
  lower: [0, 0]
  upper: [2, 1]
  cells: [16, 8]
time:
  horizon: 0.02
  steps: 8
  subintervals: 2
model:
  m: 2
  q: 3
  solver: split
drift:
  preset: shear
  structure: general
  q1: .inf
  q2: 4
initial:
  preset: two-bumps
  width: 0.05
tolerances:
  newton_tol: 1e-8
audit:
  checks: [energy, speed]
"""
        )
        assert config.kind is ExperimentKind.AUDIT
        assert config.experiment.name == "shear-check"
        assert config.grid.upper == (2.0, 1.0)
        assert config.time.subintervals == 2
        assert config.q == 3.0
        assert config.model.solver is SolverKind.SPLIT
        assert config.drift.structure is DriftStructure.GENERAL
        assert math.isinf(config.drift.q1)
        assert config.initial.preset is InitialPreset.TWO_BUMPS
        assert config.tolerances.newton_tol == 1e-8
        assert config.audit.checks == ("energy", "speed")

    def test_exponent_literal_without_dot(self):
        """1e-10 is read as a number even though YAML sees a string."""
        config = loads_run_config("tolerances:\n  newton_tol: 1e-10\n")
        assert config.tolerances.newton_tol == 1e-10

    def test_round_trip(self):
        """dump_run_config output loads back to an equal config."""
        config = make_run_config(
            grid={"cells": [8, 8]},
            drift={"preset": "rotation", "amplitude": 2.0},
            initial={"preset": "two-bumps", "centers": [[0.3, 0.5], [0.7, 0.5]]},
        )
        assert loads_run_config(dump_run_config(config)) == config

    def test_coefficient_table(self):
        """A table drift reads one list of terms per axis with omitted lists as zeros."""
        config = loads_run_config(
            "grid:\n  cells: [8, 8]\n"
            "drift:\n  preset: table\n  flags: [tangent]\n  coefficients:\n"
            "    - [{coef: 2.0, sin: [1, 0], cos: [0, 1]}]\n"
            "    - [{coef: -1.5, powers: [1, 0], sin: [0, 1]}, {coef: 0.5}]\n"
        )
        first, second = config.drift.coefficients
        assert first[0].coef == 2.0
        assert first[0].powers == (0, 0)
        assert first[0].sin == (1, 0)
        assert [t.coef for t in second] == [-1.5, 0.5]
        assert config.drift.flags == ("tangent",)

    def test_coefficient_table_round_trip(self):
        """The table survives dump_run_config."""
        config = make_run_config(
            grid={"cells": [8]},
            drift={"preset": "table", "flags": ["tangent"], "coefficients": [[{"coef": 1.0, "sin": [2]}]]},
        )
        assert loads_run_config(dump_run_config(config)) == config

    def test_load_from_file(self, tmp_path):
        """load_run_config reads a file from disk."""
        path = tmp_path / "run.yaml"
        path.write_text("model:\n  m: 3\n")
        assert load_run_config(path).model.m == 3.0

    def test_missing_file(self, tmp_path):
        """An unreadable path is a ConfigError."""
        with pytest.raises(ConfigError, match="Cannot read config file"):
            load_run_config(tmp_path / "missing.yaml")


class TestConfigErrors:
    """Tests for error messages and their line numbers."""

    def test_unknown_section_has_line(self):
        """Unknown sections are reported with their line."""
        with pytest.raises(ConfigError, match="Unknown section") as exc_info:
            loads_run_config("grid:\n  cells: [8]\nbogus: 1\n")
        assert exc_info.value.line == 3
        assert str(exc_info.value).startswith("line 3:")

    def test_unknown_field_has_line(self):
        """Unknown fields point at the offending key."""
        with pytest.raises(ConfigError, match="colour") as exc_info:
            loads_run_config("model:\n  m: 2\n  colour: red\n")
        assert exc_info.value.line == 3

    def test_bad_value_has_line(self):
        """Range violations name section, key and line."""
        with pytest.raises(ConfigError, match="model.m: must be > 1") as exc_info:
            loads_run_config("model:\n  m: 1\n")
        assert exc_info.value.line == 2

    def test_invalid_yaml(self):
        """Syntax errors carry the parser's line."""
        with pytest.raises(ConfigError, match="Invalid YAML") as exc_info:
            loads_run_config("model:\n  m: [1, 2\n")
        assert exc_info.value.line is not None

    @pytest.mark.parametrize(
        "text,message",
        [
            ("", "Empty config file"),
            ("- a\n- b\n", "Top-level YAML must be a mapping"),
            ("model: 3\n", "must be a mapping"),
            ("model:\n  m: true\n", "expected a number"),
            ("model:\n  m: .inf\n", "must be finite"),
            ("grid:\n  cells: [4, 4, 4]\n", "one- or two-dimensional"),
            ("grid:\n  cells: [3]\n", "at least 4 cells"),
            ("grid:\n  lower: [1]\n  upper: [0]\n", "need lower < upper"),
            ("time:\n  steps: 10\n  subintervals: 4\n", "does not divide steps"),
            ("time:\n  n_values: [8, 4]\n", "strictly increasing"),
            ("drift:\n  preset: constant\n", "required for the constant drift"),
            ("drift:\n  preset: rotation\n", "two-dimensional grid"),
            ("drift:\n  preset: whirl\n", "unknown value 'whirl'"),
            ("drift:\n  preset: table\n", "required for the table drift"),
            ("drift:\n  preset: table\n  coefficients: [[], []]\n", "one list of terms per axis"),
            ("drift:\n  preset: table\n  coefficients: [[{coef: 1, tan: [1]}]]\n", "Unknown coefficient key"),
            ("drift:\n  preset: table\n  coefficients: [[{coef: 1, sin: [-1]}]]\n", "nonnegative integers"),
            ("drift:\n  preset: table\n  coefficients: [[{sin: [1]}]]\n", "finite number"),
            ("drift:\n  preset: shear\n  flags: [tangent]\n", "table drift only"),
            ("drift:\n  preset: table\n  flags: [smooth]\n  coefficients: [[]]\n", "expected any of"),
            ("initial:\n  center: [0.5, 0.5]\n", "must have length 1"),
            ("audit:\n  checks: [energy, magic]\n", "unknown check"),
        ],
    )
    def test_rejected_configs(self, text, message):
        """Invalid values fail at load time with a descriptive message."""
        with pytest.raises(ConfigError, match=message):
            loads_run_config(text)


class TestKindRequirements:
    """Tests for cross-section checks that depend on the experiment kind."""

    def test_regions_needs_figure_and_dimension(self):
        """All missing values are listed together."""
        with pytest.raises(ConfigError) as exc_info:
            parse_run_config({"experiment": {"kind": "regions"}})
        message = str(exc_info.value)
        assert "experiment.figure" in message
        assert "model.d" in message

    def test_thresholds_needs_d_at_least_two(self):
        """Exponent diagrams are stated for d >= 2."""
        with pytest.raises(ConfigError, match="d >= 2"):
            parse_run_config({"experiment": {"kind": "thresholds"}, "model": {"d": 1}})

    def test_simulation_dimension_must_match_grid(self):
        """model.d must agree with the grid for simulation kinds."""
        with pytest.raises(ConfigError, match="1-dimensional"):
            parse_run_config({"experiment": {"kind": "audit"}, "model": {"d": 2}})

    def test_ks_dimension(self):
        """Keller-Segel exponent windows need d >= 3."""
        with pytest.raises(ConfigError, match="d >= 3"):
            parse_run_config({"experiment": {"kind": "ks"}, "model": {"d": 2}})

    def test_ks_model_dimension_may_exceed_grid(self):
        """A Keller-Segel run may evaluate d = 3 exponents on a 2D box."""
        config = parse_run_config(
            {"experiment": {"kind": "ks"}, "grid": {"cells": [8, 8]}, "model": {"d": 3}}
        )
        assert config.d == 3
        assert config.dimension == 2

    def test_split_study_n_values_divide_steps(self):
        """Every n must divide the step count."""
        with pytest.raises(ConfigError, match="do not divide steps"):
            parse_run_config(
                {"experiment": {"kind": "split-study"}, "time": {"steps": 64, "n_values": [4, 8, 48]}}
            )


class TestBuildRunConfig:
    """Tests for layering presets, files and overrides."""

    def test_preset_with_overrides(self):
        """Command-line values replace preset values key by key."""
        config = build_run_config(
            ExperimentKind.AUDIT,
            preset="divfree-rotation",
            overrides={"model": {"q": 3.0}, "time": {"steps": 20}},
        )
        assert config.kind is ExperimentKind.AUDIT
        assert config.model.m == 2.0
        assert config.q == 3.0
        assert config.time.steps == 20
        assert config.drift.preset == "rotation"

    def test_file_between_preset_and_overrides(self, tmp_path):
        """The file overrides the preset; overrides win over both."""
        path = tmp_path / "run.yaml"
        path.write_text("model:\n  m: 3\n  q: 4\n")
        config = build_run_config(
            ExperimentKind.AUDIT,
            config_path=path,
            preset="pure-pme",
            overrides={"model": {"q": 5.0}},
        )
        assert config.model.m == 3.0
        assert config.q == 5.0
        assert config.grid.cells == (64,)

    def test_conflicting_kind_in_file(self, tmp_path):
        """A file written for another command is refused."""
        path = tmp_path / "run.yaml"
        path.write_text("experiment:\n  kind: simulate\n")
        with pytest.raises(ConfigError, match="declares experiment kind 'simulate'") as exc_info:
            build_run_config(ExperimentKind.AUDIT, config_path=path)
        assert exc_info.value.line == 2

    def test_regions_from_overrides(self):
        """Exponent-only kinds need no grid or drift."""
        config = build_run_config(
            ExperimentKind.REGIONS,
            overrides={"model": {"m": 1.5, "d": 3}, "experiment": {"figure": "ac-moderate-m"}},
        )
        assert config.experiment.figure is FigureId.AC_MODERATE_M
        assert isinstance(config, RunConfig)

    def test_unknown_preset(self):
        """Unknown presets list the valid names."""
        with pytest.raises(ConfigError, match="divfree-rotation"):
            build_run_config(ExperimentKind.AUDIT, preset="nope")
