"""Weak-form residual of a computed trajectory against smooth test functions.

For a test function ``φ`` the residual is

    Σₖ dtₖ ∫ (ρφₜ − ∇ρᵐ·∇φ + ρV·∇φ)(t_{k+1}) + ∫ρ₀φ(0) − ∫ρ_K φ(T),

which vanishes for an exact solution with zero-flux boundary conditions.
Time integrals use the right end point of each step, matching the implicit
diffusion; ``∇ρᵐ·∇φ`` is paired on interior faces.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from pme_lab.drift.fields import VectorFieldSpec
from pme_lab.exceptions import AuditError, GridError
from pme_lab.geometry.grid import Grid, face_gradients, integrate
from pme_lab.trajectory import TrajectoryRecord
from pme_lab.types import Field, Points

__all__ = ["TestFunction", "WeakFormReport", "default_test_functions", "weak_form_residual"]

logger = logging.getLogger(__name__)

ScalarFn = Callable[[Points, float], Field]
VectorFn = Callable[[Points, float], Points]


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Smooth ``φ(x, t)`` with its spatial gradient and time derivative."""

    __test__ = False

    name: str
    phi: ScalarFn
    grad: VectorFn
    dt_phi: ScalarFn


@dataclass
class WeakFormReport:
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max((abs(r) for r in self.residuals.values()), default=0.0)

    @property
    def worst(self) -> str | None:
        if not self.residuals:
            return None
        return max(self.residuals, key=lambda k: abs(self.residuals[k]))


def _zeros(x: Points, t: float) -> Field:
    return np.zeros(x.shape[:-1])


def default_test_functions(grid: Grid, horizon: float) -> list[TestFunction]:
    """Constants, Neumann cosines and a decaying polynomial on box coordinates.

    With ``ξ = (x − a)/L`` the set is ``1``, ``cos(πξ₀)``,
    ``cos(πξ₀)(1 − t/T)²`` and ``ξ₀²(1 − t/T)``; in two dimensions
    ``cos(πξ₁)`` and ``cos(πξ₀)cos(πξ₁)`` are added.
    """
    lower = np.asarray(grid.lower, dtype=float)
    extent = np.asarray(grid.extents, dtype=float)
    d = grid.dimension
    T = float(horizon)

    def xi(x: Points, axis: int) -> Field:
        return (x[..., axis] - lower[axis]) / extent[axis]

    def along(axis: int, component: Field) -> Points:
        out = np.zeros(component.shape + (d,))
        out[..., axis] = component
        return out

    def cos_axis(axis: int) -> TestFunction:
        k = math.pi / extent[axis]
        return TestFunction(
            name="cos-x" if axis == 0 else "cos-y",
            phi=lambda x, t: np.cos(math.pi * xi(x, axis)),
            grad=lambda x, t: along(axis, -k * np.sin(math.pi * xi(x, axis))),
            dt_phi=_zeros,
        )

    k0 = math.pi / extent[0]
    tests = [
        TestFunction(
            name="one",
            phi=lambda x, t: np.ones(x.shape[:-1]),
            grad=lambda x, t: np.zeros_like(x),
            dt_phi=_zeros,
        ),
        cos_axis(0),
        TestFunction(
            name="cos-x-decay",
            phi=lambda x, t: np.cos(math.pi * xi(x, 0)) * (1 - t / T) ** 2,
            grad=lambda x, t: along(0, -k0 * np.sin(math.pi * xi(x, 0)) * (1 - t / T) ** 2),
            dt_phi=lambda x, t: np.cos(math.pi * xi(x, 0)) * (-2.0 / T) * (1 - t / T),
        ),
        TestFunction(
            name="poly",
            phi=lambda x, t: xi(x, 0) ** 2 * (1 - t / T),
            grad=lambda x, t: along(0, 2 * xi(x, 0) / extent[0] * (1 - t / T)),
            dt_phi=lambda x, t: -xi(x, 0) ** 2 / T,
        ),
    ]
    if d == 2:
        k1 = math.pi / extent[1]
        tests.append(cos_axis(1))
        tests.append(
            TestFunction(
                name="cos-xy",
                phi=lambda x, t: np.cos(math.pi * xi(x, 0)) * np.cos(math.pi * xi(x, 1)),
                grad=lambda x, t: np.stack(
                    (
                        -k0 * np.sin(math.pi * xi(x, 0)) * np.cos(math.pi * xi(x, 1)),
                        -k1 * np.cos(math.pi * xi(x, 0)) * np.sin(math.pi * xi(x, 1)),
                    ),
                    axis=-1,
                ),
                dt_phi=_zeros,
            )
        )
    return tests


def _interior(faces: Points, axis: int) -> Points:
    index = [slice(None)] * (faces.ndim - 1)
    index[axis] = slice(1, -1)
    return faces[tuple(index)]


def _diffusion_pairing(grid: Grid, pressure: Field, test: TestFunction, t: float) -> float:
    total = 0.0
    for axis, g in enumerate(face_gradients(grid, pressure)):
        faces = _interior(grid.face_points[axis], axis)
        total += float(np.sum(g * test.grad(faces, t)[..., axis]))
    return total * grid.cell_volume


def weak_form_residual(
    trajectory: TrajectoryRecord,
    V: VectorFieldSpec,
    m: float,
    tests: list[TestFunction] | None = None,
) -> WeakFormReport:
    """Residual of every test function along ``trajectory``.

    Raises:
        AuditError: If the trajectory has fewer than two fields.
        GridError: If the drift dimension does not match the grid.
    """
    if len(trajectory) < 2:
        raise AuditError("Weak-form residual needs at least two recorded fields")
    grid = trajectory.grid
    if V.dimension != grid.dimension:
        raise GridError(f"Drift '{V.name}' is {V.dimension}D, grid is {grid.dimension}D")

    fields = trajectory.fields
    t0, T = fields[0].time, fields[-1].time
    if tests is None:
        tests = default_test_functions(grid, T - t0 if T > t0 else 1.0)
    x = grid.centers

    report = WeakFormReport()
    for test in tests:
        bulk = 0.0
        for prev, cur in zip(fields, fields[1:]):
            dt = cur.time - prev.time
            t = cur.time - t0
            rho = cur.values
            drift = np.sum(V(x, cur.time) * test.grad(x, t), axis=-1)
            bulk += dt * (
                integrate(grid, rho * test.dt_phi(x, t))
                - _diffusion_pairing(grid, rho**m, test, t)
                + integrate(grid, rho * drift)
            )
        boundary = integrate(grid, fields[0].values * test.phi(x, 0.0)) - integrate(
            grid, fields[-1].values * test.phi(x, T - t0)
        )
        report.residuals[test.name] = float(bulk + boundary)
        logger.debug(f"Weak-form residual for '{test.name}': {bulk + boundary:+.3e}")
    return report
