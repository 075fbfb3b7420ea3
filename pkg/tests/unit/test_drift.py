"""Tests for drift fields, characteristics and push-forward."""

import math

import numpy as np
import pytest

from pme_lab.drift import (
    VectorFieldSpec,
    constant_field,
    flow_map,
    jacobian,
    lipschitz_contraction_check,
    pushforward,
    pushforward_with_report,
    radial_field,
    rotation_field,
    shear_field,
    trace,
    zero_field,
)
from pme_lab.exceptions import ConfigError, FlowError, GridError
from pme_lab.geometry.grid import Grid, flux_divergence
from pme_lab.measures.density import DensityField
from pme_lab.measures.norms import entropy
from pme_lab.types import DriftStructure
from tests.helpers import make_bump


class TestVectorFieldSpec:
    """Tests for drift structure flags and sampling."""

    def test_zero_field_flags(self):
        """The zero drift is divergence-free and tangent."""
        V = zero_field(2)
        assert V.divergence_free and V.divergence_nonneg and V.normal_flux_zero
        assert V.structure is DriftStructure.DIV_NONNEG

    def test_constant_field_is_not_tangent(self):
        """A nonzero translation crosses the boundary."""
        V = constant_field((3.0, 4.0))
        assert not V.normal_flux_zero
        assert V.sup_norm(Grid.unit(4, 4)) == pytest.approx(5.0)

    def test_divergence_free_needs_nonneg(self):
        """divergence_free implies divergence_nonneg."""
        with pytest.raises(ConfigError, match="divergence_free"):
            VectorFieldSpec("bad", 1, lambda x, t: x, divergence_free=True)

    def test_flagged_field_must_be_tangent(self):
        """check_boundary refuses a field flagged tangent that is not."""
        V = VectorFieldSpec("leaky", 1, lambda x, t: np.ones_like(x), normal_flux_zero=True)
        with pytest.raises(ConfigError, match="normal_flux_zero"):
            V.check_boundary(Grid.unit(8))

    def test_unflagged_field_passes_boundary_check(self):
        """Fields that do not claim tangency are not checked."""
        radial_field((0.5, 0.5), outward=True).check_boundary(Grid.unit(8, 8))

    def test_boundary_check_dimension_mismatch(self):
        """The drift and the grid must share a dimension."""
        with pytest.raises(GridError, match="2D"):
            zero_field(1).check_boundary(Grid.unit(4, 4))

    def test_numeric_divergence_matches_analytic(self):
        """Central differences agree with the supplied divergence."""
        grid = Grid.unit(8, 8)
        V = shear_field(grid.lower, grid.upper, amplitude=2.0)
        numeric = np.trace(V.jacobian_matrix(grid.centers), axis1=-2, axis2=-1)
        np.testing.assert_allclose(numeric, V.div(grid.centers), atol=1e-6)


class TestPresets:
    """Tests for the built-in drift presets."""

    def test_rotation_is_tangent_and_discretely_divergence_free(self):
        """Stream-function face fluxes have zero discrete divergence."""
        grid = Grid((0.0, 0.0), (2.0, 1.0), (16, 8))
        V = rotation_field(grid.lower, grid.upper, amplitude=1.5)
        V.check_boundary(grid)
        faces = V.face_velocities(grid)
        np.testing.assert_allclose(flux_divergence(grid, faces), 0.0, atol=1e-10)
        assert V.structure is DriftStructure.DIV_NONNEG

    def test_rotation_requires_two_dimensions(self):
        """The vortex lives on a rectangle."""
        with pytest.raises(ConfigError, match="two-dimensional"):
            rotation_field((0.0,), (1.0,))

    def test_radial_divergence_sign(self):
        """Expanding fields have positive divergence, contracting negative."""
        x = np.array([[0.2, 0.7]])
        out = radial_field((0.5, 0.5), kappa=2.0, outward=True)
        inward = radial_field((0.5, 0.5), kappa=2.0)
        assert out.div(x)[0] == pytest.approx(4.0)
        assert inward.div(x)[0] == pytest.approx(-4.0)
        assert out.structure is DriftStructure.DIV_NONNEG
        assert inward.structure is DriftStructure.GENERAL
        assert inward.name == "radial-in"

    @pytest.mark.parametrize("cells", [(16,), (8, 8)])
    def test_shear_is_tangent_with_sign_changing_divergence(self, cells):
        """The shear is tangent to the box but belongs to the general class."""
        grid = Grid.unit(*cells)
        V = shear_field(grid.lower, grid.upper)
        V.check_boundary(grid)
        div = V.div(grid.centers)
        assert div.max() > 0 > div.min()
        assert V.structure is DriftStructure.GENERAL

    def test_face_velocities_zero_on_boundary(self):
        """Boundary faces never carry flux."""
        grid = Grid.unit(8)
        (u,) = constant_field((1.0,)).face_velocities(grid)
        assert u.shape == (9,)
        assert u[0] == u[-1] == 0.0
        np.testing.assert_allclose(u[1:-1], 1.0)


class TestCharacteristics:
    """Tests for trace, flow_map and jacobian."""

    def test_constant_translation(self):
        """Characteristics of a constant field are straight lines."""
        V = constant_field((0.5, -0.25))
        x = np.array([[0.1, 0.9], [0.3, 0.3]])
        np.testing.assert_allclose(flow_map(V, 0.0, 0.4, x), x + 0.4 * np.array([0.5, -0.25]))
        np.testing.assert_allclose(jacobian(V, 0.0, 0.4, x), 1.0)

    def test_radial_contraction_closed_form(self):
        """ψ = c + (x − c)e^{−κt} and J = e^{−κdt} for the contracting field."""
        c = np.array([0.5, 0.5])
        V = radial_field(c, kappa=1.5)
        x = np.array([[0.1, 0.2], [0.9, 0.6]])
        t = 0.7
        np.testing.assert_allclose(flow_map(V, 0.0, t, x), c + (x - c) * math.exp(-1.5 * t), rtol=1e-9)
        np.testing.assert_allclose(jacobian(V, 0.0, t, x), math.exp(-3.0 * t), rtol=1e-9)

    def test_backward_then_forward_is_identity(self):
        """ψ(s; t, ψ(t; s, x)) = x."""
        grid = Grid.unit(16, 16)
        V = rotation_field(grid.lower, grid.upper)
        x = grid.flat_centers()[::7]
        forward = flow_map(V, 0.0, 0.3, x, grid)
        np.testing.assert_allclose(flow_map(V, 0.3, 0.0, forward, grid), x, atol=1e-8)

    def test_zero_span_returns_input(self):
        """s = t does no work."""
        result = trace(zero_field(1), 0.2, 0.2, np.array([[0.4]]))
        assert result.substeps == 0
        assert result.points.tolist() == [[0.4]]

    def test_clamp_beyond_tolerance(self):
        """Leaving the box by more than ten cells is a FlowError."""
        grid = Grid.unit(512)
        with pytest.raises(FlowError, match="left the box") as exc_info:
            trace(constant_field((1.0,)), 0.0, 1.0, np.array([[0.5]]), grid)
        assert exc_info.value.clamp > 10 * grid.max_spacing

    def test_diffusion_step_caps_substeps(self):
        """Sub-steps never exceed the diffusion step dt."""
        x = np.array([[0.4]])
        assert trace(zero_field(1), 0.0, 0.5, x).substeps <= 11
        assert trace(zero_field(1), 0.0, 0.5, x, dt=0.03125).substeps == 16

    def test_lipschitz_bound_beats_large_dt(self):
        """A steep drift keeps sub-steps below a fraction of 1/Lip even for large dt."""
        V = radial_field((0.5,), kappa=10.0)
        result = trace(V, 0.0, 0.1, np.array([[0.4]]), dt=0.1)
        assert result.substeps >= 200

    def test_nonpositive_dt_is_rejected(self):
        """The ODE step cap must be positive."""
        with pytest.raises(ConfigError, match="positive"):
            trace(zero_field(1), 0.0, 0.1, np.array([[0.4]]), dt=0.0)

    def test_jacobian_reciprocity(self):
        """J_{s,t}(ψ(s;t,x))·J_{t,s}(x) = 1."""
        V = shear_field((0.0, 0.0), (1.0, 1.0), amplitude=1.5)
        x = np.random.default_rng(3).uniform(0.1, 0.9, size=(12, 2))
        back = flow_map(V, 0.4, 0.1, x)
        product = jacobian(V, 0.1, 0.4, back) * jacobian(V, 0.4, 0.1, x)
        np.testing.assert_allclose(product, 1.0, atol=1e-6)

    def test_jacobian_matches_finite_difference_determinant(self):
        """exp of the divergence integral equals det Dψ from central differences."""
        V = shear_field((0.0, 0.0), (1.0, 1.0), amplitude=1.5)
        x = np.random.default_rng(4).uniform(0.15, 0.85, size=(6, 2))
        step = 1e-5
        columns = []
        for axis in range(2):
            offset = np.zeros(2)
            offset[axis] = step
            forward = flow_map(V, 0.0, 0.5, x + offset)
            backward = flow_map(V, 0.0, 0.5, x - offset)
            columns.append((forward - backward) / (2 * step))
        determinant = np.linalg.det(np.stack(columns, axis=-1))
        np.testing.assert_allclose(jacobian(V, 0.0, 0.5, x), determinant, rtol=1e-5)

    def test_missing_lipschitz_needs_grid(self):
        """A drift without a Lipschitz bound needs a grid to sample one."""
        V = VectorFieldSpec("plain", 1, lambda x, t: x)
        with pytest.raises(ConfigError, match="Lipschitz"):
            trace(V, 0.0, 0.1, np.array([[0.5]]))

    def test_contraction_bounds_hold(self):
        """Pair distances stay inside e^{±L}."""
        V = radial_field((0.5, 0.5), kappa=1.0)
        rng = np.random.default_rng(1)
        pairs = rng.random((20, 2, 2))
        report = lipschitz_contraction_check(V, 0.0, 0.5, pairs)
        assert report.passed
        assert report.lipschitz_integral == pytest.approx(0.5)
        assert report.min_ratio == pytest.approx(math.exp(-0.5), rel=1e-8)


class TestPushforward:
    """Tests for the semi-Lagrangian push-forward."""

    def test_rotation_keeps_mass(self):
        """Push-forward under the vortex conserves mass with a small correction."""
        grid = Grid.unit(24, 24)
        rho = make_bump(grid, center=(0.35, 0.5), width=0.12, floor=0.05)
        V = rotation_field(grid.lower, grid.upper)
        out, report = pushforward_with_report(rho, V, 0.0, 0.05)
        assert out.mass == pytest.approx(1.0)
        assert abs(report.mass_drift) < 0.05
        assert out.time == pytest.approx(0.05)

    def test_translation_moves_the_centre_of_mass(self):
        """A constant drift shifts the mean by v·t."""
        grid = Grid.unit(128)
        rho = make_bump(grid, center=(0.3,), width=0.05)
        out = pushforward(rho, constant_field((1.0,)), 0.0, 0.05)
        mean = float(np.sum(out.values * grid.centers[..., 0]) * grid.cell_volume)
        assert mean == pytest.approx(0.35, abs=2e-3)

    def test_escape_with_mass_is_an_error(self):
        """Feet far outside the box raise FlowError."""
        grid = Grid.unit(32)
        with pytest.raises(FlowError, match="left the box"):
            pushforward(DensityField.uniform(grid), constant_field((1.0,)), 0.0, 0.5)

    def test_strong_contraction_over_long_span_is_an_error(self):
        """A narrow bump under a strong inward radial drift cannot silently lose its mass."""
        grid = Grid.unit(32, 32)
        rho = make_bump(grid, center=(0.5, 0.5), width=0.03)
        with pytest.raises(FlowError, match="left the box") as exc_info:
            pushforward_with_report(rho, radial_field((0.5, 0.5), kappa=3.0), 0.0, 1.0)
        assert exc_info.value.clamp > 10 * grid.max_spacing

    def test_escape_into_vacuum_is_still_an_error(self):
        """Feet far outside the box raise even where the density is zero."""
        grid = Grid.unit(32)
        values = np.zeros(32)
        values[14:18] = 1.0
        rho = DensityField(grid, values).normalized()
        with pytest.raises(FlowError, match="left the box"):
            pushforward(rho, constant_field((1.0,)), 0.0, 0.5)

    def test_empty_pushforward_is_an_error(self):
        """Positive mass that interpolates to nothing raises instead of reading zero."""
        grid = Grid.unit(32)
        values = np.zeros(32)
        values[0] = 1.0
        rho = DensityField(grid, values).normalized()
        with pytest.raises(FlowError, match="lost all"):
            pushforward(rho, constant_field((-0.2,)), 0.0, 0.2)

    def test_mass_preserved_with_diffusion_step_cap(self):
        """Passing dt changes the sub-step count but keeps the mass."""
        grid = Grid.unit(24, 24)
        rho = make_bump(grid, center=(0.4, 0.5), width=0.1, floor=0.05)
        V = rotation_field(grid.lower, grid.upper)
        out, report = pushforward_with_report(rho, V, 0.0, 0.05, dt=0.005)
        coarse = pushforward_with_report(rho, V, 0.0, 0.05)[1]
        assert out.mass == pytest.approx(1.0)
        assert report.substeps >= 10
        assert report.substeps >= coarse.substeps

    def test_entropy_shift_under_contraction(self):
        """∫ρ log ρ = ∫ϱ log ϱ − ∫ϱ log J for a bump pulled toward the centre."""
        grid = Grid((-1.0,), (1.0,), (256,))
        rho = make_bump(grid, center=(0.0,), width=0.15)
        V = radial_field((0.0,), kappa=1.0)
        out = pushforward(rho, V, 0.0, 0.02)
        log_j = np.log(jacobian(V, 0.0, 0.02, grid.flat_centers())).reshape(grid.shape)
        expected = entropy(rho) - float(np.sum(rho.values * log_j) * grid.cell_volume)
        assert expected == pytest.approx(entropy(rho) + 0.02)
        assert entropy(out) == pytest.approx(expected, abs=2e-3)

    def test_mass_drift_shrinks_under_refinement(self):
        """The renormalisation applied after the vortex push-forward is at least first order in h."""
        drifts = []
        for n in (16, 32, 64):
            grid = Grid.unit(n, n)
            rho = make_bump(grid, center=(0.35, 0.5), width=0.12, floor=0.05)
            _, report = pushforward_with_report(rho, rotation_field(grid.lower, grid.upper), 0.0, 0.1)
            drifts.append(abs(report.mass_drift))
        assert drifts[0] > 0.0
        assert math.log2(drifts[0] / drifts[-1]) / 2 >= 1.0

    def test_same_time_is_identity(self):
        """s = t returns the input density."""
        rho = DensityField.uniform(Grid.unit(8))
        out, report = pushforward_with_report(rho, zero_field(1), 0.3, 0.3)
        assert out is rho
        assert report.substeps == 0

    def test_dimension_mismatch(self):
        """Density and drift dimensions must agree."""
        with pytest.raises(ConfigError, match="1D"):
            pushforward(DensityField.uniform(Grid.unit(8)), zero_field(2), 0.0, 0.1)
