"""Tests for DensityField and TrajectoryRecord."""

import numpy as np
import pytest

from pme_lab.exceptions import AuditError, GridError, NormalizationError
from pme_lab.geometry.grid import Grid
from pme_lab.measures.density import DensityField
from pme_lab.trajectory import TrajectoryRecord
from tests.helpers import make_bump, make_grid, make_trajectory


class TestDensityField:
    """Tests for DensityField construction and normalization."""

    def test_uniform_has_unit_mass(self):
        """Uniform density on a non-unit box integrates to one."""
        grid = make_grid(8, 4, upper=(2.0, 3.0))
        rho = DensityField.uniform(grid)
        assert rho.mass == pytest.approx(1.0)
        assert rho.values[0, 0] == pytest.approx(1.0 / 6.0)

    def test_values_are_copied_and_frozen(self):
        """Mutating the source array leaves the density unchanged."""
        grid = Grid.unit(4)
        source = np.ones(4)
        rho = DensityField(grid, source)
        source[0] = 10.0
        assert rho.values[0] == 1.0
        with pytest.raises(ValueError):
            rho.values[0] = 2.0

    def test_rejects_negative_values(self):
        """Densities are nonnegative."""
        with pytest.raises(NormalizationError, match="nonnegative"):
            DensityField(Grid.unit(4), np.array([1.0, -0.1, 1.0, 1.0]))

    def test_rejects_nan(self):
        """Non-finite values are rejected."""
        with pytest.raises(NormalizationError, match="non-finite"):
            DensityField(Grid.unit(4), np.array([1.0, np.nan, 1.0, 1.0]))

    def test_rejects_shape_mismatch(self):
        """Values must match the grid shape."""
        with pytest.raises(GridError, match="does not match"):
            DensityField(Grid.unit(4), np.ones(5))

    def test_from_function_clips_and_normalizes(self):
        """Negative samples become zero and the result has unit mass."""
        grid = Grid.unit(10)
        rho = DensityField.from_function(grid, lambda x: x[..., 0] - 0.5)
        assert rho.values.min() == 0.0
        assert rho.mass == pytest.approx(1.0)

    def test_require_normalized(self):
        """require_normalized raises when mass is off by more than the tolerance."""
        grid = Grid.unit(4)
        DensityField(grid, np.ones(4)).require_normalized()
        with pytest.raises(NormalizationError, match="mass is 2"):
            DensityField(grid, 2 * np.ones(4)).require_normalized()

    def test_normalized_zero_mass(self):
        """A zero density cannot be normalized."""
        with pytest.raises(NormalizationError, match="zero mass"):
            DensityField(Grid.unit(4), np.zeros(4)).normalized()

    def test_with_values_keeps_time(self):
        """with_values keeps the time unless one is given."""
        rho = DensityField.uniform(Grid.unit(4), time=0.3)
        assert rho.with_values(np.ones(4)).time == 0.3
        assert rho.with_values(np.ones(4), time=0.5).time == 0.5


class TestTrajectoryRecord:
    """Tests for TrajectoryRecord."""

    def test_starting_at_records_mass(self):
        """The initial diagnostics carry the mass."""
        rho0 = make_bump(make_grid(16))
        record = TrajectoryRecord.starting_at(rho0)
        assert len(record) == 1
        assert record.series("mass")[0] == pytest.approx(1.0)
        assert record.initial is record.final

    def test_times_and_steps(self):
        """times and steps follow the appended fields."""
        grid = make_grid(8)
        record = make_trajectory([np.ones(8)] * 3, grid, dt=0.5)
        assert record.times.tolist() == [0.0, 0.5, 1.0]
        assert record.steps.tolist() == [0.5, 0.5]
        assert record.stack().shape == (3, 8)
        assert record.masses().tolist() == pytest.approx([1.0, 1.0, 1.0])

    def test_rejects_decreasing_time(self):
        """Times must not decrease."""
        grid = make_grid(8)
        record = make_trajectory([np.ones(8)], grid)
        record.append(DensityField(grid, np.ones(8), 1.0))
        with pytest.raises(GridError, match="must not decrease"):
            record.append(DensityField(grid, np.ones(8), 0.5))

    def test_rejects_other_grid(self):
        """Every field shares one grid."""
        record = make_trajectory([np.ones(8)], make_grid(8))
        with pytest.raises(GridError, match="share one grid"):
            record.append(DensityField(make_grid(16), np.ones(16), 1.0))

    def test_empty_trajectory_has_no_final(self):
        """initial and final need at least one field."""
        with pytest.raises(AuditError, match="empty"):
            TrajectoryRecord(make_grid(8)).final
