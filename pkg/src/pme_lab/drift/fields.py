"""Drift vector fields with declared structure and the built-in presets."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from pme_lab.exceptions import ConfigError, GridError
from pme_lab.geometry.grid import Grid
from pme_lab.types import DriftStructure, Field, Points

__all__ = [
    "VectorFieldSpec",
    "CoefficientTerm",
    "coefficient_field",
    "zero_field",
    "constant_field",
    "rotation_field",
    "radial_field",
    "shear_field",
    "BOUNDARY_RTOL",
]

Velocity = Callable[[Points, float], Points]
ScalarOfSpace = Callable[[Points, float], Field]

BOUNDARY_RTOL = 1e-10
DIVERGENCE_ATOL = 1e-9
FD_STEP = 1e-6


@dataclass(frozen=True, eq=False)
class VectorFieldSpec:
    """Velocity ``V(x, t)`` with its structure flags.

    ``velocity`` maps points of shape ``(..., d)`` to velocities of the same
    shape. ``stream`` is an optional stream function (two dimensions only,
    ``V = (∂ψ/∂y, −∂ψ/∂x)``) used for exactly divergence-free face fluxes.
    """

    name: str
    dimension: int
    velocity: Velocity
    divergence: ScalarOfSpace | None = None
    normal_flux_zero: bool = False
    divergence_nonneg: bool = False
    divergence_free: bool = False
    lipschitz: float | None = None
    stream: ScalarOfSpace | None = None

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise ConfigError(f"Drift dimension must be 1 or 2, got {self.dimension}")
        if self.divergence_free and not self.divergence_nonneg:
            raise ConfigError(
                f"Drift '{self.name}': divergence_free requires divergence_nonneg"
            )
        if self.stream is not None and self.dimension != 2:
            raise ConfigError("Stream functions are only defined in two dimensions")
        if self.lipschitz is not None and not self.lipschitz >= 0:
            raise ConfigError(f"Lipschitz bound must be nonnegative, got {self.lipschitz}")

    def __call__(self, x: Points, t: float = 0.0) -> Points:
        return np.asarray(self.velocity(np.asarray(x, dtype=float), t), dtype=float)

    @property
    def structure(self) -> DriftStructure:
        return DriftStructure.DIV_NONNEG if self.divergence_nonneg else DriftStructure.GENERAL

    def div(self, x: Points, t: float = 0.0) -> Field:
        """Analytic divergence when supplied, central differences otherwise."""
        x = np.asarray(x, dtype=float)
        if self.divergence is not None:
            return np.asarray(self.divergence(x, t), dtype=float) * np.ones(x.shape[:-1])
        total = np.zeros(x.shape[:-1])
        for axis in range(self.dimension):
            e = np.zeros(self.dimension)
            e[axis] = FD_STEP
            total += (self(x + e, t)[..., axis] - self(x - e, t)[..., axis]) / (2 * FD_STEP)
        return total

    def jacobian_matrix(self, x: Points, t: float = 0.0) -> np.ndarray:
        """Central-difference ``∇V`` of shape ``(..., d, d)``."""
        x = np.asarray(x, dtype=float)
        cols = []
        for axis in range(self.dimension):
            e = np.zeros(self.dimension)
            e[axis] = FD_STEP
            cols.append((self(x + e, t) - self(x - e, t)) / (2 * FD_STEP))
        return np.stack(cols, axis=-1)

    def lipschitz_estimate(self, grid: Grid, t: float = 0.0) -> float:
        """Supplied bound, or the largest sampled ``|∇V|`` at cell centres."""
        if self.lipschitz is not None:
            return self.lipschitz
        jac = self.jacobian_matrix(grid.centers, t)
        return float(np.max(np.linalg.norm(jac, ord=2, axis=(-2, -1))))

    def sup_norm(self, grid: Grid, t: float = 0.0) -> float:
        """``max |V|`` over cell centres and face midpoints."""
        best = float(np.max(np.linalg.norm(self(grid.centers, t), axis=-1)))
        for faces in grid.face_points:
            best = max(best, float(np.max(np.linalg.norm(self(faces, t), axis=-1))))
        return best

    def divergence_sup(self, grid: Grid, t: float = 0.0) -> float:
        return float(np.max(np.abs(self.div(grid.centers, t))))

    def boundary_normal_max(self, grid: Grid, t: float = 0.0) -> float:
        """Largest ``|V·n|`` on boundary face midpoints."""
        worst = 0.0
        for axis, faces in enumerate(grid.face_points):
            normal = self(faces, t)[..., axis]
            edge = np.take(normal, [0, -1], axis=axis)
            worst = max(worst, float(np.max(np.abs(edge))))
        return worst

    def check_boundary(self, grid: Grid, t: float = 0.0) -> None:
        """Raise if the field claims ``V·n = 0`` but the samples disagree."""
        if grid.dimension != self.dimension:
            raise GridError(
                f"Drift '{self.name}' is {self.dimension}D, grid is {grid.dimension}D"
            )
        if not self.normal_flux_zero:
            return
        worst = self.boundary_normal_max(grid, t)
        scale = max(self.sup_norm(grid, t), 1e-300)
        if worst > BOUNDARY_RTOL * scale:
            raise ConfigError(
                f"Drift '{self.name}' is flagged normal_flux_zero but |V·n| reaches "
                f"{worst:.3e} on the boundary"
            )

    def check_structure(self, grid: Grid, t: float = 0.0) -> None:
        """:meth:`check_boundary` plus the divergence flags, sampled at centres and face midpoints.

        Raises:
            ConfigError: If a declared flag does not hold on the samples.
        """
        self.check_boundary(grid, t)
        if not self.divergence_nonneg:
            return
        samples = np.concatenate(
            [self.div(grid.centers, t).ravel(), *(self.div(f, t).ravel() for f in grid.face_points)]
        )
        tol = DIVERGENCE_ATOL * max(self.lipschitz_estimate(grid, t), 1.0)
        if self.divergence_free and float(np.max(np.abs(samples))) > tol:
            raise ConfigError(
                f"Drift '{self.name}' is flagged divergence_free but |∇·V| reaches "
                f"{float(np.max(np.abs(samples))):.3e}"
            )
        if float(np.min(samples)) < -tol:
            raise ConfigError(
                f"Drift '{self.name}' is flagged divergence_nonneg but ∇·V reaches "
                f"{float(np.min(samples)):.3e}"
            )

    def face_velocities(self, grid: Grid, t: float = 0.0) -> list[Field]:
        """Average normal velocity on every face, boundary faces set to 0.

        With a stream function the average is exact, so the discrete
        divergence of a divergence-free field vanishes to round-off.
        """
        if grid.dimension != self.dimension:
            raise GridError(
                f"Drift '{self.name}' is {self.dimension}D, grid is {grid.dimension}D"
            )
        if self.stream is not None:
            out = _stream_face_velocities(grid, self.stream, t)
        else:
            out = [self(faces, t)[..., axis] for axis, faces in enumerate(grid.face_points)]
        for axis, u in enumerate(out):
            index = [slice(None)] * grid.dimension
            index[axis] = 0
            u[tuple(index)] = 0.0
            index[axis] = -1
            u[tuple(index)] = 0.0
        return out


def _stream_face_velocities(grid: Grid, stream: ScalarOfSpace, t: float) -> list[Field]:
    ex, ey = grid.edges
    hx, hy = grid.spacing
    corners = np.stack(np.meshgrid(ex, ey, indexing="ij"), axis=-1)
    psi = np.asarray(stream(corners, t), dtype=float)
    u = (psi[:, 1:] - psi[:, :-1]) / hy
    v = -(psi[1:, :] - psi[:-1, :]) / hx
    return [u, v]


def _normalized(x: Points, lower: Sequence[float], upper: Sequence[float]) -> Points:
    a = np.asarray(lower, dtype=float)
    b = np.asarray(upper, dtype=float)
    return (x - a) / (b - a)


def zero_field(dimension: int) -> VectorFieldSpec:
    return VectorFieldSpec(
        name="zero",
        dimension=dimension,
        velocity=lambda x, t: np.zeros_like(x),
        divergence=lambda x, t: np.zeros(x.shape[:-1]),
        normal_flux_zero=True,
        divergence_nonneg=True,
        divergence_free=True,
        lipschitz=0.0,
    )


def constant_field(vector: Sequence[float]) -> VectorFieldSpec:
    """Uniform translation; not tangent to any box boundary unless zero."""
    vec = np.asarray(vector, dtype=float)
    return VectorFieldSpec(
        name="constant",
        dimension=len(vec),
        velocity=lambda x, t: np.broadcast_to(vec, x.shape).copy(),
        divergence=lambda x, t: np.zeros(x.shape[:-1]),
        normal_flux_zero=bool(np.all(vec == 0)),
        divergence_nonneg=True,
        divergence_free=True,
        lipschitz=0.0,
    )


def rotation_field(
    lower: Sequence[float],
    upper: Sequence[float],
    amplitude: float = 1.0,
) -> VectorFieldSpec:
    """Cellular vortex filling a rectangle, tangent to its boundary.

    ``ψ = A(L_y/π) sin(πx̂) sin(πŷ)`` on normalised coordinates.
    """
    if len(lower) != 2:
        raise ConfigError("The rotation drift is two-dimensional")
    lx, ly = upper[0] - lower[0], upper[1] - lower[1]

    def velocity(x: Points, t: float) -> Points:
        s = _normalized(x, lower, upper)
        sx, sy = math.pi * s[..., 0], math.pi * s[..., 1]
        return np.stack(
            (
                amplitude * np.sin(sx) * np.cos(sy),
                -amplitude * (ly / lx) * np.cos(sx) * np.sin(sy),
            ),
            axis=-1,
        )

    def stream(x: Points, t: float) -> Field:
        s = _normalized(x, lower, upper)
        return amplitude * (ly / math.pi) * np.sin(math.pi * s[..., 0]) * np.sin(math.pi * s[..., 1])

    lip = abs(amplitude) * math.pi * math.sqrt(2.0 / lx**2 + 1.0 / ly**2 + ly**2 / lx**4)
    return VectorFieldSpec(
        name="rotation",
        dimension=2,
        velocity=velocity,
        divergence=lambda x, t: np.zeros(x.shape[:-1]),
        normal_flux_zero=True,
        divergence_nonneg=True,
        divergence_free=True,
        lipschitz=lip,
        stream=stream,
    )


def radial_field(
    center: Sequence[float],
    kappa: float = 1.0,
    outward: bool = False,
) -> VectorFieldSpec:
    """``±κ(x − c)``; expanding fields have divergence ``κd > 0``."""
    c = np.asarray(center, dtype=float)
    d = len(c)
    sign = 1.0 if outward else -1.0
    return VectorFieldSpec(
        name="radial-out" if outward else "radial-in",
        dimension=d,
        velocity=lambda x, t: sign * kappa * (x - c),
        divergence=lambda x, t: np.full(x.shape[:-1], sign * kappa * d),
        normal_flux_zero=False,
        divergence_nonneg=sign * kappa >= 0,
        divergence_free=kappa == 0,
        lipschitz=abs(kappa),
    )


def shear_field(
    lower: Sequence[float],
    upper: Sequence[float],
    amplitude: float = 1.0,
) -> VectorFieldSpec:
    """Compressive field ``A sin(πx̂)`` along the first axis, tangent to the box.

    In two dimensions the first component is damped by ``cos(πŷ)``. Its
    divergence changes sign, so it belongs to the general class.
    """
    d = len(lower)
    l0 = upper[0] - lower[0]

    if d == 1:

        def velocity(x: Points, t: float) -> Points:
            s = _normalized(x, lower, upper)
            return amplitude * np.sin(math.pi * s)

        def divergence(x: Points, t: float) -> Field:
            s = _normalized(x, lower, upper)
            return amplitude * (math.pi / l0) * np.cos(math.pi * s[..., 0])

        lip = abs(amplitude) * math.pi / l0
    else:
        l1 = upper[1] - lower[1]

        def velocity(x: Points, t: float) -> Points:
            s = _normalized(x, lower, upper)
            u = amplitude * np.sin(math.pi * s[..., 0]) * np.cos(math.pi * s[..., 1])
            return np.stack((u, np.zeros_like(u)), axis=-1)

        def divergence(x: Points, t: float) -> Field:
            s = _normalized(x, lower, upper)
            return (
                amplitude
                * (math.pi / l0)
                * np.cos(math.pi * s[..., 0])
                * np.cos(math.pi * s[..., 1])
            )

        lip = abs(amplitude) * math.pi * math.sqrt(1.0 / l0**2 + 1.0 / l1**2)

    return VectorFieldSpec(
        name="shear",
        dimension=d,
        velocity=velocity,
        divergence=divergence,
        normal_flux_zero=True,
        divergence_nonneg=amplitude == 0,
        divergence_free=amplitude == 0,
        lipschitz=lip,
    )


TERM_KEYS = {"coef", "powers", "sin", "cos"}


def _mode_factor(s: Field, mode: int, fn: Callable[[Field], Field]) -> Field:
    return fn(math.pi * mode * s) if mode else np.ones_like(s)


@dataclass(frozen=True)
class CoefficientTerm:
    """``coef · Π ŝₖ^{powers[k]} · Π sin(π sin[k] ŝₖ) · Π cos(π cos[k] ŝₖ)``.

    ``ŝ`` is the position rescaled to the unit box; a zero mode drops that
    trigonometric factor.
    """

    coef: float
    powers: tuple[int, ...]
    sin: tuple[int, ...]
    cos: tuple[int, ...]

    @classmethod
    def from_mapping(cls, raw: Any, dimension: int) -> CoefficientTerm:
        """Parse ``{coef, powers, sin, cos}``; omitted lists default to zeros.

        Raises:
            ConfigError: On unknown keys, wrong lengths, or negative or
                non-integer exponents and modes.
        """
        if not isinstance(raw, dict):
            raise ConfigError(f"Coefficient term must be a mapping, got {raw!r}")
        unknown = set(raw) - TERM_KEYS
        if unknown:
            raise ConfigError(f"Unknown coefficient key(s): {', '.join(sorted(map(str, unknown)))}")
        coef = raw.get("coef")
        if isinstance(coef, bool) or not isinstance(coef, (int, float)) or not math.isfinite(coef):
            raise ConfigError(f"Coefficient 'coef' must be a finite number, got {coef!r}")
        lists = {}
        for key in ("powers", "sin", "cos"):
            values = raw.get(key, [0] * dimension)
            if (
                not isinstance(values, list)
                or len(values) != dimension
                or any(isinstance(v, bool) or not isinstance(v, int) or v < 0 for v in values)
            ):
                raise ConfigError(
                    f"Coefficient '{key}' must list {dimension} nonnegative integers, got {values!r}"
                )
            lists[key] = tuple(values)
        return cls(float(coef), lists["powers"], lists["sin"], lists["cos"])

    def to_dict(self) -> dict[str, Any]:
        return {"coef": self.coef, "powers": list(self.powers), "sin": list(self.sin), "cos": list(self.cos)}

    def _factors(self, s: Points) -> tuple[list[Field], list[Field]]:
        values, slopes = [], []
        for k, (p, a, b) in enumerate(zip(self.powers, self.sin, self.cos)):
            x = s[..., k]
            mono = x**p
            d_mono = p * x ** (p - 1) if p > 0 else np.zeros_like(x)
            sn = _mode_factor(x, a, np.sin)
            d_sn = math.pi * a * np.cos(math.pi * a * x) if a else np.zeros_like(x)
            cs = _mode_factor(x, b, np.cos)
            d_cs = -math.pi * b * np.sin(math.pi * b * x) if b else np.zeros_like(x)
            values.append(mono * sn * cs)
            slopes.append(d_mono * sn * cs + mono * d_sn * cs + mono * sn * d_cs)
        return values, slopes

    def value(self, s: Points) -> Field:
        values, _ = self._factors(s)
        return self.coef * np.prod(values, axis=0)

    def partial(self, s: Points, axis: int) -> Field:
        """``∂/∂ŝ_axis`` of the term."""
        values, slopes = self._factors(s)
        values[axis] = slopes[axis]
        return self.coef * np.prod(values, axis=0)


def coefficient_field(
    lower: Sequence[float],
    upper: Sequence[float],
    table: Sequence[Sequence[CoefficientTerm]],
    normal_flux_zero: bool = False,
    divergence_nonneg: bool = False,
    divergence_free: bool = False,
    name: str = "table",
) -> VectorFieldSpec:
    """Drift whose ``i``-th component is the sum of the terms in ``table[i]``.

    The flags are declarations; :meth:`VectorFieldSpec.check_structure`
    verifies them on a grid. No Lipschitz bound is attached, so the flow
    samples one from the grid.
    """
    d = len(lower)
    if len(table) != d:
        raise ConfigError(f"Coefficient table has {len(table)} components, the box is {d}D")
    lengths = np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float)

    def velocity(x: Points, t: float) -> Points:
        s = _normalized(x, lower, upper)
        comps = [sum((term.value(s) for term in terms), np.zeros(s.shape[:-1])) for terms in table]
        return np.stack(comps, axis=-1)

    def divergence(x: Points, t: float) -> Field:
        s = _normalized(x, lower, upper)
        total = np.zeros(s.shape[:-1])
        for axis, terms in enumerate(table):
            for term in terms:
                total = total + term.partial(s, axis) / lengths[axis]
        return total

    return VectorFieldSpec(
        name=name,
        dimension=d,
        velocity=velocity,
        divergence=divergence,
        normal_flux_zero=normal_flux_zero,
        divergence_nonneg=divergence_nonneg or divergence_free,
        divergence_free=divergence_free,
    )
