"""Self-similar source solution of the porous medium equation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from pme_lab.exceptions import ConfigError, DomainError
from pme_lab.geometry.grid import Grid
from pme_lab.measures.density import DensityField
from pme_lab.types import Field, Points

__all__ = ["BarenblattProfile", "barenblatt"]


@dataclass(frozen=True)
class BarenblattProfile:
    """``U(x,t) = t^{-α}(C − k|x−x₀|² t^{-2β})₊^{1/(m−1)}`` carrying mass ``mass``."""

    m: float
    d: int
    mass: float = 1.0

    def __post_init__(self) -> None:
        if not self.m > 1:
            raise ConfigError(f"Barenblatt profile needs m > 1, got {self.m}")
        if self.d < 1:
            raise ConfigError(f"Dimension must be positive, got {self.d}")
        if not self.mass > 0:
            raise ConfigError(f"Mass must be positive, got {self.mass}")

    @property
    def alpha(self) -> float:
        return self.d / (self.d * (self.m - 1.0) + 2.0)

    @property
    def beta(self) -> float:
        return self.alpha / self.d

    @property
    def k(self) -> float:
        return self.alpha * (self.m - 1.0) / (2.0 * self.m * self.d)

    @property
    def constant(self) -> float:
        """``C`` fixed by ``∫U = mass``."""
        g = 1.0 / (self.m - 1.0)
        half_d = self.d / 2.0
        ratio = gamma_fn(g + 1.0 + half_d) / (math.pi**half_d * gamma_fn(g + 1.0))
        return (self.mass * self.k**half_d * ratio) ** (1.0 / (g + half_d))

    def support_radius(self, t: float) -> float:
        return math.sqrt(self.constant / self.k) * t**self.beta

    def __call__(self, x: Points, t: float, center: Points | None = None) -> Field:
        if not t > 0:
            raise DomainError(f"Barenblatt profile is defined for t > 0, got {t}")
        x = np.asarray(x, dtype=float)
        c = np.zeros(self.d) if center is None else np.asarray(center, dtype=float)
        r2 = np.sum((x - c) ** 2, axis=-1)
        core = np.maximum(self.constant - self.k * r2 * t ** (-2.0 * self.beta), 0.0)
        return t ** (-self.alpha) * core ** (1.0 / (self.m - 1.0))


def barenblatt(
    grid: Grid,
    m: float,
    t: float,
    center: tuple[float, ...] | None = None,
    scaling: float = 1.0,
) -> DensityField:
    """Barenblatt density at time ``t`` sampled on ``grid``, renormalised to unit mass.

    ``scaling`` is the mass of the continuum profile and sets its width.

    Raises:
        DomainError: If the support at time ``t`` leaves the box.
    """
    profile = BarenblattProfile(m, grid.dimension, scaling)
    if center is None:
        center = tuple(0.5 * (a + b) for a, b in zip(grid.lower, grid.upper))
    radius = profile.support_radius(t)
    for axis, (a, b, c) in enumerate(zip(grid.lower, grid.upper, center)):
        if c - radius < a or c + radius > b:
            raise DomainError(
                f"Barenblatt support radius {radius:.4g} at t={t:g} leaves the box "
                f"along axis {axis}"
            )
    values = profile(grid.centers, t, np.asarray(center))
    return DensityField(grid, values, t).normalized()
