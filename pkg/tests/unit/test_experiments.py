"""Tests for the experiment runner."""

import json

import pytest

from pme_lab.config import LabSettings
from pme_lab.exceptions import CflError, ConfigError
from pme_lab.runner import InMemoryArtifactStore, build_run_config, loads_run_config, run
from pme_lab.runner.experiments import AUDIT_COLUMNS, KS_COLUMNS, TIMESERIES_COLUMNS
from pme_lab.types import ExperimentKind


@pytest.fixture
def settings(tmp_path):
    """Settings pointing at a scratch directory."""
    return LabSettings(out_dir=tmp_path / "out")


def small_run(kind: ExperimentKind, **sections):
    """Config for a 16-cell, 4-step run on the unit interval."""
    base = {
        "grid": {"cells": [16]},
        "time": {"horizon": 0.004, "steps": 4, "subintervals": 2},
        "initial": {"preset": "bump", "center": [0.45], "width": 0.1, "floor": 0.05},
    }
    for name, values in sections.items():
        base[name] = {**base.get(name, {}), **values}
    return build_run_config(kind, overrides=base)


class TestExponentExperiments:
    """Tests for the thresholds and regions experiments."""

    def test_thresholds(self, settings):
        """thresholds.json carries every exponent and the q̃2 range."""
        config = build_run_config(ExperimentKind.THRESHOLDS, overrides={"model": {"m": 2.0, "d": 3, "q": 2.0}})
        store = InMemoryArtifactStore()
        result = run(config, settings, store)
        assert result.ok
        payload = json.loads(store.get("thresholds.json"))
        assert payload["thresholds"]["q_star"] == pytest.approx(8.0 / 3.0)
        assert payload["tilde_q2_range"]["low"] == pytest.approx(1.4)
        assert set(result.artifacts) == {"thresholds.json", "config.yaml"}

    def test_thresholds_default_q_is_one(self, settings):
        """Exponent-only runs read an unset q as 1."""
        config = build_run_config(ExperimentKind.THRESHOLDS, overrides={"model": {"m": 2.0, "d": 3}})
        store = InMemoryArtifactStore()
        run(config, settings, store)
        assert json.loads(store.get("thresholds.json"))["thresholds"]["q"] == 1.0

    def test_regions(self, settings):
        """region.json carries vertex E and the point cloud has its columns."""
        config = build_run_config(
            ExperimentKind.REGIONS,
            overrides={"model": {"m": 1.5, "d": 3}, "experiment": {"figure": "ac-moderate-m", "resolution": 20}},
        )
        store = InMemoryArtifactStore()
        result = run(config, settings, store)
        assert result.exit_code == 0
        region = json.loads(store.get("region.json"))
        vertices = {v["label"]: (v["x"], v["y"]) for v in region["vertices"]}
        assert vertices["E"] == (pytest.approx(0.25), pytest.approx(0.5))
        assert store.get("region_points.csv").startswith("polygon,inv_q1,inv_q2\n")
        assert any("E = (0.25, 0.5)" in line for line in result.summary)


class TestSimulationExperiments:
    """Tests for simulate, split-study and audit runs."""

    def test_simulate_split_writes_series(self, settings):
        """A split run writes the time series, sub-interval gaps and field dumps."""
        config = small_run(ExperimentKind.SIMULATE, model={"solver": "split"}, drift={"preset": "shear"})
        store = InMemoryArtifactStore()
        result = run(config, settings, store)
        assert result.ok
        lines = store.get("timeseries.csv").splitlines()
        assert lines[0] == ",".join(TIMESERIES_COLUMNS)
        assert len(lines) == 6
        assert len(store.get("subintervals.csv").splitlines()) == 3
        summary = json.loads(store.get("summary.json"))
        assert summary["final_mass"] == pytest.approx(1.0)
        assert summary["subintervals"] == 2
        assert {"fields/rho_00000.txt", "fields/rho_00004.txt"} <= set(result.artifacts)

    def test_simulate_without_fields(self, settings):
        """output.fields false skips the field dumps."""
        config = small_run(ExperimentKind.SIMULATE, output={"fields": False})
        result = run(config, settings, InMemoryArtifactStore())
        assert not any(name.startswith("fields/") for name in result.artifacts)
        assert "subintervals.csv" not in result.artifacts

    def test_split_study_tables(self, settings):
        """The study writes one row per n and its rate summary."""
        config = small_run(
            ExperimentKind.SPLIT_STUDY,
            time={"steps": 8, "horizon": 0.008, "n_values": [2, 4, 8]},
            drift={"preset": "shear"},
        )
        store = InMemoryArtifactStore()
        run(config, settings, store)
        assert len(store.get("refinement.csv").splitlines()) == 4
        summary = json.loads(store.get("refinement.json"))
        assert summary["n_values"] == [2, 4, 8]
        assert summary["rate_threshold"] == pytest.approx(0.8)

    def test_audit_report(self, settings):
        """A drift-free audit passes and writes report and table."""
        config = small_run(ExperimentKind.AUDIT, audit={"checks": ["energy", "entropy"]})
        store = InMemoryArtifactStore()
        result = run(config, settings, store)
        assert result.exit_code == 0
        report = json.loads(store.get("report.json"))
        assert report["ok"] is True
        assert [a["audit_name"] for a in report["audits"]] == ["energy[q=2]", "entropy"]
        assert store.get("audits.csv").splitlines()[0] == ",".join(AUDIT_COLUMNS)
        assert result.report is not None

    def test_audit_window_checked_before_solving(self, settings):
        """An interpolation exponent off the window is a config error."""
        config = small_run(ExperimentKind.AUDIT, audit={"checks": ["interpolation"], "r1": 1.5})
        with pytest.raises(ConfigError, match="bound"):
            run(config, settings, InMemoryArtifactStore())

    def test_audit_refinement_entry(self, settings):
        """--refinement adds the energy constant comparison."""
        config = small_run(ExperimentKind.AUDIT, audit={"checks": ["energy"], "refinement": True})
        result = run(config, settings, InMemoryArtifactStore())
        entry = result.report.entry("energy_refinement")
        assert entry.metadata["fine_cells"] == [32]
        assert entry.metadata["fine_steps"] == 8

    def test_general_drift_energy_is_judged_on_a_refined_run(self, settings):
        """Under a sign-changing divergence the energy audit compares against the refined grid."""
        config = small_run(ExperimentKind.AUDIT, drift={"preset": "shear"}, audit={"checks": ["energy"]})
        result = run(config, settings, InMemoryArtifactStore())
        entry = result.report.entry("energy[q=2]")
        assert entry.metadata["structure"] == "general"
        assert entry.metadata["refinement"] == "compared"
        assert entry.metadata["refined_cells"] == [32]
        assert entry.metadata["refined_steps"] == 8

    def test_split_audit_reports_lq_growth_and_holder(self, settings):
        """Split runs add the L^q growth and Hölder-in-time checks to the report."""
        config = small_run(
            ExperimentKind.AUDIT,
            model={"solver": "split", "m": 3.0},
            drift={"preset": "shear"},
            audit={"checks": ["entropy"]},
        )
        store = InMemoryArtifactStore()
        result = run(config, settings, store)
        names = [e.name for e in result.report.entries]
        assert names == ["entropy", "split_lq[q=2]", "split_lq[q=3]", "split_lq[q=inf]", "split_holder"]
        for name in names[1:]:
            assert result.report.entry(name).passed, name
        assert result.report.entry("split_holder").metadata["pairs"] == 3


class TestKsExperiment:
    """Tests for the Keller-Segel experiment."""

    def test_ks_series_and_admissibility(self, settings):
        """The run writes its series, report and the exponent window for d."""
        config = small_run(
            ExperimentKind.KS,
            model={"m": 7.0 / 6.0, "d": 3},
            initial={"signal": "bump"},
        )
        store = InMemoryArtifactStore()
        result = run(config, settings, store)
        assert store.get("ks_timeseries.csv").splitlines()[0] == ",".join(KS_COLUMNS)
        admissibility = json.loads(store.get("ks_admissibility.json"))
        assert admissibility["q_max"] == pytest.approx(1.5)
        assert admissibility["regime"] == "three-d-window"
        for name in ("ks_mass", "ks_signal_bounds", "ks_signal_integral"):
            assert result.report.entry(name).passed, name
        assert {"fields/rho_final.txt", "fields/c_final.txt"} <= set(result.artifacts)


class TestRunOutputs:
    """Tests for staging, the manifest and the config echo."""

    def test_manifest_lists_every_artifact(self, settings):
        """Every output file appears in manifest.json with its checksum."""
        config = small_run(ExperimentKind.SIMULATE)
        store = InMemoryArtifactStore()
        result = run(config, settings, store)
        manifest = json.loads(store.get("manifest.json"))
        listed = {a["name"]: a["sha256"] for a in manifest["artifacts"]}
        assert listed == result.artifacts
        assert set(store.list_artifacts()) == set(listed) | {"manifest.json"}

    def test_config_echo_round_trips(self, settings):
        """config.yaml loads back to the config that ran."""
        config = small_run(ExperimentKind.SIMULATE)
        store = InMemoryArtifactStore()
        run(config, settings, store)
        assert loads_run_config(store.get("config.yaml")) == config

    def test_outputs_are_deterministic(self, settings):
        """Two identical runs produce identical checksums."""
        config = small_run(ExperimentKind.SIMULATE, drift={"preset": "shear"})
        first = run(config, settings, InMemoryArtifactStore())
        second = run(config, settings, InMemoryArtifactStore())
        assert first.artifacts == second.artifacts

    def test_failed_run_writes_nothing(self, tmp_path):
        """A numerical failure leaves the output directory absent."""
        out = tmp_path / "out"
        config = small_run(
            ExperimentKind.SIMULATE,
            time={"horizon": 0.4, "steps": 4},
            drift={"preset": "constant", "vector": [1.0]},
        )
        with pytest.raises(CflError):
            run(config, LabSettings(out_dir=out))
        assert not out.exists()

    def test_directory_store_by_default(self, tmp_path):
        """Without a store the run writes under settings.out_dir."""
        out = tmp_path / "out"
        config = small_run(ExperimentKind.SIMULATE, output={"fields": False})
        run(config, LabSettings(out_dir=out))
        assert (out / "manifest.json").is_file()
        assert (out / "timeseries.csv").is_file()
