"""Nonnegative cell densities on a grid."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from pme_lab.exceptions import GridError, NormalizationError
from pme_lab.geometry.grid import Grid, integrate
from pme_lab.types import Field, Points

__all__ = ["DensityField", "MASS_TOL"]

MASS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class DensityField:
    """Cell-averaged density at one instant.

    Values are copied on construction and frozen. Mass is not forced to 1
    here; operations that need a probability density call
    :meth:`require_normalized`.
    """

    grid: Grid
    values: Field
    time: float = 0.0

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True)
        if values.shape != self.grid.shape:
            raise GridError(
                f"Density shape {values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NormalizationError("Density contains non-finite values")
        if np.any(values < 0):
            raise NormalizationError(
                f"Density must be nonnegative, min value {values.min():.3e}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def uniform(cls, grid: Grid, time: float = 0.0) -> DensityField:
        return cls(grid, np.full(grid.shape, 1.0 / grid.volume), time)

    @classmethod
    def from_function(
        cls,
        grid: Grid,
        fn: Callable[[Points], Field],
        time: float = 0.0,
        normalize: bool = True,
    ) -> DensityField:
        """Sample ``fn`` at cell centres; negative samples are cut to 0."""
        values = np.maximum(np.asarray(fn(grid.centers), dtype=float), 0.0)
        density = cls(grid, values, time)
        return density.normalized() if normalize else density

    @property
    def mass(self) -> float:
        return integrate(self.grid, self.values)

    def is_normalized(self, tol: float = MASS_TOL) -> bool:
        return abs(self.mass - 1.0) <= tol

    def require_normalized(self, tol: float = MASS_TOL) -> None:
        if not self.is_normalized(tol):
            raise NormalizationError(
                f"Expected a probability density, mass is {self.mass:.12g}"
            )

    def normalized(self) -> DensityField:
        mass = self.mass
        if mass <= 0:
            raise NormalizationError("Cannot normalize a density with zero mass")
        return DensityField(self.grid, self.values / mass, self.time)

    def with_values(self, values: Field, time: float | None = None) -> DensityField:
        return DensityField(self.grid, values, self.time if time is None else time)

    def at_time(self, time: float) -> DensityField:
        return DensityField(self.grid, self.values, time)
