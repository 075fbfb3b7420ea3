"""Tests for the estimate audits and the estimate report."""

import math

import numpy as np
import pytest

from pme_lab.audit import (
    AuditEntry,
    EstimateReport,
    audit_compactness,
    audit_energy,
    audit_energy_family,
    audit_entropy,
    audit_interpolation,
    audit_parabolic_embedding,
    audit_speed,
    audit_wasserstein_holder,
    check_window,
    compare_refinement,
    speed_identity_residual,
)
from pme_lab.audit.energy import drift_energy_coefficient, family_exponents, fit_gronwall_constant
from pme_lab.audit.holder import select_frames
from pme_lab.audit.interpolation import holder_conjugate, window_r2
from pme_lab.audit.report import jsonable
from pme_lab.audit.sampling import drift_class_norm, drift_time_integral, time_weights
from pme_lab.audit.speed import speed_theta
from pme_lab.drift import constant_field, rotation_field
from pme_lab.exceptions import AuditError, InadmissibleWindowError, InvalidExponentError
from pme_lab.geometry.grid import Grid
from pme_lab.pme import PmeStepConfig, pme_trajectory
from pme_lab.types import DriftStructure
from tests.helpers import make_bump, make_trajectory


@pytest.fixture
def line_run():
    """Pure PME run on 32 cells of the unit interval."""
    rho0 = make_bump(Grid.unit(32), center=(0.45,), width=0.1, floor=0.05)
    return pme_trajectory(rho0, PmeStepConfig(m=2.0, dt=1e-3), steps=6)


@pytest.fixture
def square_run():
    """Pure PME run on a 12×12 grid of the unit square."""
    rho0 = make_bump(Grid.unit(12, 12), width=0.15, floor=0.05)
    return pme_trajectory(rho0, PmeStepConfig(m=2.0, dt=1e-3), steps=4)


def _uniform_run(count: int = 3, cells: int = 8):
    grid = Grid.unit(cells)
    return make_trajectory([np.ones(cells) for _ in range(count)], grid)


class TestReport:
    """Tests for AuditEntry, EstimateReport and compare_refinement."""

    def test_jsonable_maps_non_finite_to_null(self):
        """inf and NaN serialise as None, numpy scalars as plain numbers."""
        data = jsonable({"a": math.inf, "b": np.float64(2.5), "c": np.array([1, 2]), "d": np.bool_(True)})
        assert data == {"a": None, "b": 2.5, "c": [1, 2], "d": True}

    def test_entry_to_dict_keys(self):
        """Entries serialise under the report field names."""
        entry = AuditEntry("speed", 1.0, {"dissipation": 2.0}, constant=math.inf, passed=True)
        data = entry.to_dict()
        assert data["audit_name"] == "speed"
        assert data["pass"] is True
        assert data["constant"] is None

    def test_report_status(self):
        """One failing entry fails the report with exit code 1."""
        report = EstimateReport(m=2.0, q=2.0, d=1, drift="zero", cells=(32,))
        report.add(AuditEntry("a", 0.0, passed=True))
        assert report.ok and report.exit_code == 0
        report.extend([AuditEntry("b", 1.0, passed=False, slack=-1.0)])
        assert not report.ok
        assert report.exit_code == 1
        assert report.failed() == ["b"]
        assert report.entry("b").slack == -1.0

    def test_report_to_dict(self):
        """The report carries its schema version and run parameters."""
        report = EstimateReport(m=2.0, q=3.0, d=2, drift="rotation", cells=(8, 8), n=4)
        report.add(AuditEntry("a", 0.0, passed=True))
        data = report.to_dict()
        assert data["schema_version"] == 1
        assert data["run"] == {"m": 2.0, "q": 3.0, "d": 2, "drift": "rotation", "cells": [8, 8], "n": 4}
        assert data["ok"] is True
        assert [a["audit_name"] for a in data["audits"]] == ["a"]

    def test_missing_entry(self):
        """Looking up an unknown audit raises KeyError."""
        with pytest.raises(KeyError):
            EstimateReport(2.0, 2.0, 1, "zero", (8,)).entry("energy")

    @pytest.mark.parametrize(
        "coarse,fine,passed",
        [(1.0, 1.05, True), (1.0, 1.2, False), (1.0, 0.5, True), (0.0, 0.0, True), (0.0, 1.0, False)],
    )
    def test_compare_refinement(self, coarse, fine, passed):
        """Growth up to ten percent passes; shrinking always passes."""
        assert compare_refinement(coarse, fine).passed is passed

    def test_compare_refinement_reads_entries(self):
        """Entries contribute their fitted constants; None reads as zero."""
        check = compare_refinement(AuditEntry("a", 0.0, constant=2.0), AuditEntry("a", 0.0, constant=None))
        assert check.fine == 0.0
        assert check.growth == pytest.approx(-1.0)
        assert math.isinf(compare_refinement(1.0, math.inf).growth)


class TestSampling:
    """Tests for the space-time sampling helpers."""

    def test_time_weights_skip_the_initial_field(self):
        """The initial field has weight 0, later fields their step."""
        np.testing.assert_allclose(time_weights(_uniform_run(3)), [0.0, 0.01, 0.01])

    def test_constant_drift_norms(self):
        """‖V‖ of a constant field is |v|·T^{1/q2}."""
        record = _uniform_run(3)
        V = constant_field((2.0,))
        assert drift_class_norm(V, record, math.inf, 2.0) == pytest.approx(2.0 * math.sqrt(0.02))
        assert drift_time_integral(V, record) == pytest.approx(4.0 * 0.02)
        assert drift_time_integral(None, record) == 0.0

    def test_single_field_rejected(self):
        """Audits need at least two fields."""
        with pytest.raises(AuditError, match="at least 2"):
            audit_energy(_uniform_run(1), 2.0, 2.0)


class TestEnergyAudit:
    """Tests for the L^q energy and entropy audits."""

    def test_drift_energy_coefficient(self):
        """2qm(q−1)/(q+m−1)² at m = q = 2 is 8/9."""
        assert drift_energy_coefficient(2.0, 2.0) == pytest.approx(8.0 / 9.0)

    def test_fit_gronwall_constant(self):
        """C solves (initial + C)·exp(C·I) = lhs when the bound is tight."""
        assert fit_gronwall_constant(1.0, 2.0, 5.0) == 0.0
        assert fit_gronwall_constant(2.0, 1.0, 0.0) == pytest.approx(1.0)
        c = fit_gronwall_constant(2.0, 1.0, 1.0)
        assert (1.0 + c) * math.exp(c) == pytest.approx(2.0, rel=1e-9)

    def test_family_exponents(self):
        """Steps of 0.25 from max(1.25, m−1), always ending at q."""
        assert family_exponents(2.0, 2.0) == pytest.approx([1.25, 1.5, 1.75, 2.0])
        assert family_exponents(2.0, 2.1) == pytest.approx([1.25, 1.5, 1.75, 2.0, 2.1])
        assert family_exponents(3.5, 2.0) == [2.0]

    def test_nonnegative_divergence_balance(self, line_run):
        """A drift-free run satisfies the running balance with constant 1."""
        entry = audit_energy(line_run, 2.0, 2.0, DriftStructure.DIV_NONNEG)
        assert entry.name == "energy[q=2]"
        assert entry.passed
        assert entry.constant == 1.0
        assert entry.metadata["max_increment"] <= 1e-6

    def test_general_branch_fits_constant(self, line_run):
        """Without a drift integral the fitted constant is lhs − initial."""
        entry = audit_energy(line_run, 2.0, 2.0, "general")
        assert entry.constant == pytest.approx(max(0.0, entry.lhs - entry.rhs_terms["initial"]), abs=1e-10)

    def test_general_branch_without_refined_run_fails(self, line_run):
        """A fitted constant that was never compared across grids is not a pass."""
        entry = audit_energy(line_run, 2.0, 2.0, "general")
        assert not entry.passed
        assert entry.metadata["refinement"] == "missing"
        assert entry.to_dict()["slack"] is None

    def test_general_branch_passes_on_stable_constant(self, line_run):
        """The same constant on the refined run passes."""
        entry = audit_energy(line_run, 2.0, 2.0, "general", refined=line_run)
        assert entry.passed
        assert entry.metadata["refined_constant"] == pytest.approx(entry.constant)
        assert entry.metadata["growth"] == pytest.approx(0.0)
        assert entry.metadata["refined_cells"] == [32]

    def test_general_branch_fails_on_growing_constant(self, line_run):
        """A refined run whose L² energy jumps makes the constant grow past the allowance."""
        grid = Grid.unit(64)
        bump = make_bump(grid, center=(0.5,), width=0.05).values
        refined = make_trajectory([np.ones(64), bump], grid, dt=1e-3)
        entry = audit_energy(line_run, 2.0, 2.0, "general", refined=refined)
        assert not entry.passed
        assert entry.metadata["refined_constant"] > 1.1 * entry.constant
        assert entry.slack < 0

    def test_family_forwards_the_refined_run(self, line_run):
        """Every family member is judged against the refined run."""
        entries = audit_energy_family(line_run, 2.0, 1.5, "general", refined=line_run)
        assert all(e.passed for e in entries)
        assert all(e.metadata["refinement"] == "compared" for e in entries)

    def test_family_names(self, line_run):
        """Family entries are named by their exponent."""
        entries = audit_energy_family(line_run, 2.0, 1.5, DriftStructure.DIV_NONNEG)
        assert [e.name for e in entries] == ["energy[r=1.25]", "energy[r=1.5]"]

    def test_q_one_routes_to_entropy(self, line_run):
        """q = 1 is the entropy audit."""
        assert audit_energy(line_run, 2.0, 1.0).name == "entropy"

    def test_rejects_small_q(self, line_run):
        """q below 1 is refused."""
        with pytest.raises(InvalidExponentError):
            audit_energy(line_run, 2.0, 0.5)

    def test_uniform_entropy(self):
        """Uniform data without drift has zero entropy and constant 0."""
        entry = audit_entropy(_uniform_run(3), 2.0)
        assert entry.constant == 0.0
        assert entry.passed
        assert entry.metadata["entropy_nonincreasing"]

    def test_entropy_decreases_along_pme(self, line_run):
        """The entropy of a drift-free run does not increase."""
        entry = audit_entropy(line_run, 2.0)
        assert entry.passed
        assert entry.metadata["entropy_nonincreasing"]
        assert entry.metadata["dissipation"] > 0.0


class TestSpeedAudit:
    """Tests for the speed estimate."""

    def test_identity_is_round_off(self):
        """|w|²ρ and the lifted gradient agree cellwise."""
        rho = make_bump(Grid.unit(16, 16), width=0.2, floor=0.05)
        assert speed_identity_residual(rho.grid, rho.values, 2.0) < 1e-10

    def test_theta_vanishes_at_lambda_two(self):
        """θ = 0 once λ_q reaches 2."""
        assert speed_theta(2.0, math.inf, 3) == 0.0

    def test_speed_at_q_equals_m(self, line_run):
        """At q = m the identity residual is checked and reported."""
        entry = audit_speed(line_run, 2.0, 2.0)
        assert entry.name == "speed"
        assert entry.passed
        assert entry.metadata["identity_residual"] < 1e-10
        assert set(entry.metadata["constants"]) == {"0.5", "0.1"}
        assert entry.rhs_terms["drift_speed"] == 0.0

    def test_drift_speed(self, line_run):
        """A constant drift of speed 2 contributes 2^λ per unit mass and time."""
        entry = audit_speed(line_run, 2.0, 1.5, V=constant_field((2.0,)))
        lam = entry.metadata["lambda_q"]
        horizon = entry.rhs_terms["horizon"]
        assert entry.rhs_terms["drift_speed"] == pytest.approx(2.0**lam * horizon, rel=1e-8)
        assert entry.metadata["identity_residual"] is None


class TestHolderAudit:
    """Tests for the time-Hölder audit in W_λ."""

    def test_select_frames(self):
        """Frames are spread evenly and keep both ends."""
        assert select_frames(5).tolist() == [0, 1, 2, 3, 4]
        frames = select_frames(100, 12)
        assert len(frames) == 12
        assert (frames[0], frames[-1]) == (0, 99)

    def test_needs_eight_fields(self):
        """Fewer than eight fields cannot be fitted."""
        with pytest.raises(AuditError, match="at least 8"):
            audit_wasserstein_holder(_uniform_run(7), 2.0)

    def test_static_curve_passes_undefined(self):
        """A curve that never moves passes with an undefined exponent."""
        entry = audit_wasserstein_holder(_uniform_run(10), 2.0)
        assert entry.passed
        assert entry.metadata["exponent"] == "undefined"
        assert entry.metadata["target_exponent"] == pytest.approx(0.5)

    def test_subsampling_is_recorded(self):
        """Long runs are thinned to twelve frames and the report says so."""
        grid = Grid.unit(64)
        record = make_trajectory(
            [make_bump(grid, center=(0.3 + 0.01 * k,), width=0.05).values for k in range(20)], grid
        )
        entry = audit_wasserstein_holder(record, 2.0)
        assert entry.metadata["recorded_fields"] == 20
        assert entry.metadata["subsampled"] is True
        assert len(entry.metadata["frames"]) == 12

    def test_all_pairs_without_frame_limit(self):
        """max_frames=None measures every pair at least four steps apart."""
        grid = Grid.unit(64)
        record = make_trajectory(
            [make_bump(grid, center=(0.3 + 0.01 * k,), width=0.05).values for k in range(20)], grid
        )
        entry = audit_wasserstein_holder(record, 2.0, max_frames=None)
        assert entry.metadata["subsampled"] is False
        assert entry.metadata["frames"] == list(range(20))
        assert entry.metadata["pairs"] == 136
        assert entry.metadata["exponent"] == pytest.approx(1.0, abs=0.05)


class TestInterpolationAudit:
    """Tests for the window check, interpolation, embedding and compactness."""

    def test_window_r2_on_the_scaling_line(self):
        """r1 = q puts r2 at infinity."""
        assert math.isinf(window_r2(2.0, 2.0, 3, 2.0))
        assert window_r2(2.0, 2.0, 3, 12.0) == pytest.approx(2.8)

    def test_check_window_accepts_line_points(self):
        """(q, ∞) is admissible in three dimensions."""
        check_window(2.0, 2.0, 3, 2.0, math.inf)

    @pytest.mark.parametrize(
        "m,q,d,r1,r2,bound",
        [
            (2.0, 2.0, 3, 2.0, 2.0, "d/r1 + (2+Q)/r2 = d/q"),
            (2.0, 2.0, 3, 12.0, 2.8, "r1 <= d(q+m-1)/(d-2)"),
            (2.0, 2.0, 2, math.inf, 3.0, "r1 < inf"),
        ],
    )
    def test_check_window_names_the_bound(self, m, q, d, r1, r2, bound):
        """Violations carry the bound they break."""
        with pytest.raises(InadmissibleWindowError) as exc_info:
            check_window(m, q, d, r1, r2)
        assert exc_info.value.bound == bound

    def test_holder_conjugate(self):
        """γq/(q−γ) for finite q, γ itself at infinity."""
        assert holder_conjugate(1.5, math.inf) == 1.5
        assert holder_conjugate(1.0, 2.0, 2.0) == pytest.approx(4.0)
        with pytest.raises(InadmissibleWindowError):
            holder_conjugate(2.0, 2.0)

    def test_interpolation_fits_a_constant(self, square_run):
        """Without a supplied constant one is fitted and reported."""
        entry = audit_interpolation(square_run, 2.0, 2.0, r1=2.0)
        assert entry.name == "interpolation[r1=2,r2=inf]"
        assert entry.passed
        assert entry.constant == entry.metadata["fitted_constant"]
        assert entry.rhs_terms["mass_term"] == pytest.approx(1.0)

    def test_interpolation_with_given_constant(self, square_run):
        """A supplied constant is checked, not fitted."""
        fitted = audit_interpolation(square_run, 2.0, 2.0, r1=2.0).constant
        assert audit_interpolation(square_run, 2.0, 2.0, r1=2.0, constant=2 * fitted).passed
        assert not audit_interpolation(square_run, 2.0, 2.0, r1=2.0, constant=0.5 * fitted).passed

    def test_parabolic_embedding(self, square_run):
        """The embedding power is q+m−1+2q/d."""
        entry = audit_parabolic_embedding(square_run, 2.0, 2.0)
        assert entry.passed
        assert entry.metadata["power"] == pytest.approx(5.0)

    def test_compactness_products_hold(self, square_run):
        """Both Hölder products sit below their bounds with constant at most 1."""
        grid = square_run.grid
        V = rotation_field(grid.lower, grid.upper)
        entries = audit_compactness(square_run, 2.0, 2.0, V, math.inf, 2.0)
        assert [e.name for e in entries] == ["compactness_linear", "compactness_power"]
        for entry in entries:
            assert entry.passed
            assert entry.constant <= 1.0 + 1e-9
            assert isinstance(entry.metadata["window_admissible"], bool)
