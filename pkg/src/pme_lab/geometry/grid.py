"""Uniform box grids, time partitions and the discrete calculus used by every solver.

Cell fields are numpy arrays of shape ``grid.shape``. Gradients follow the
homogeneous Neumann convention: ghost cells mirror the first interior
neighbour, so the boundary-normal component of a cell gradient is exactly 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sps

from pme_lab.exceptions import GridError, InvalidExponentError
from pme_lab.types import Field, Points

__all__ = [
    "Grid",
    "TimePartition",
    "integrate",
    "gradient",
    "face_gradients",
    "flux_divergence",
    "apply_laplacian",
    "neumann_laplacian",
    "dirichlet_energy",
    "mixed_norm",
]

MIN_CELLS = 4
VOLUME_RTOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Cell-centred uniform grid on an axis-aligned box in one or two dimensions."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self) -> None:
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        cells = tuple(int(n) for n in self.cells)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "cells", cells)

        if len(cells) not in (1, 2):
            raise GridError(f"Grid dimension must be 1 or 2, got {len(cells)}")
        if not (len(lower) == len(upper) == len(cells)):
            raise GridError(
                f"lower/upper/cells lengths differ: {len(lower)}, {len(upper)}, {len(cells)}"
            )
        for axis, (a, b, n) in enumerate(zip(lower, upper, cells)):
            if not (math.isfinite(a) and math.isfinite(b)) or b <= a:
                raise GridError(f"Axis {axis}: need finite lower < upper, got [{a}, {b}]")
            if n < MIN_CELLS:
                raise GridError(f"Axis {axis}: need at least {MIN_CELLS} cells, got {n}")

        summed = self.cell_volume * math.prod(cells)
        if abs(summed - self.volume) > VOLUME_RTOL * self.volume:
            raise GridError(f"Cell volumes sum to {summed}, box volume is {self.volume}")

    @classmethod
    def unit(cls, *cells: int) -> Grid:
        """Grid on the unit interval or unit square."""
        d = len(cells)
        return cls(lower=(0.0,) * d, upper=(1.0,) * d, cells=tuple(cells))

    @property
    def dimension(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def size(self) -> int:
        return math.prod(self.cells)

    @property
    def extents(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(length / n for length, n in zip(self.extents, self.cells))

    @property
    def max_spacing(self) -> float:
        return max(self.spacing)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def volume(self) -> float:
        return math.prod(self.extents)

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        """Cell-centre coordinates along each axis."""
        return tuple(
            a + (np.arange(n) + 0.5) * h
            for a, n, h in zip(self.lower, self.cells, self.spacing)
        )

    @cached_property
    def edges(self) -> tuple[np.ndarray, ...]:
        """Face coordinates along each axis, boundary faces included."""
        return tuple(
            a + np.arange(n + 1) * h
            for a, n, h in zip(self.lower, self.cells, self.spacing)
        )

    @cached_property
    def centers(self) -> Points:
        """Cell centres as an array of shape ``(*shape, d)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def face_points(self) -> tuple[Points, ...]:
        """Face midpoints per axis; axis ``k`` has ``N_k + 1`` faces along ``k``."""
        out = []
        for axis in range(self.dimension):
            coords = list(self.axes)
            coords[axis] = self.edges[axis]
            out.append(np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1))
        return tuple(out)

    def flat_centers(self) -> Points:
        return self.centers.reshape(-1, self.dimension)

    def refine(self, factor: int = 2) -> Grid:
        return Grid(self.lower, self.upper, tuple(n * factor for n in self.cells))

    def clamp(self, points: Points) -> tuple[Points, np.ndarray]:
        """Project points onto the closed box.

        Returns:
            The clamped points and the per-point clamp distance.
        """
        points = np.asarray(points, dtype=float)
        clamped = np.clip(points, np.asarray(self.lower), np.asarray(self.upper))
        distance = np.linalg.norm(points - clamped, axis=-1)
        return clamped, distance

    def constant(self, value: float) -> Field:
        return np.full(self.shape, float(value))


@dataclass(frozen=True)
class TimePartition:
    """Uniform time grid on [0, horizon] split into ``subintervals`` equal blocks."""

    horizon: float
    steps: int
    subintervals: int = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise GridError(f"horizon must be positive, got {self.horizon}")
        if self.steps < 1:
            raise GridError(f"steps must be >= 1, got {self.steps}")
        if self.subintervals < 1:
            raise GridError(f"subintervals must be >= 1, got {self.subintervals}")
        if self.steps % self.subintervals != 0:
            raise GridError(
                f"subintervals ({self.subintervals}) must divide steps ({self.steps})"
            )

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def steps_per_subinterval(self) -> int:
        return self.steps // self.subintervals

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    @property
    def subinterval_times(self) -> np.ndarray:
        return np.arange(self.subintervals + 1) * (self.horizon / self.subintervals)

    def with_subintervals(self, subintervals: int) -> TimePartition:
        return TimePartition(self.horizon, self.steps, subintervals)


def integrate(grid: Grid, f: Field) -> float:
    """Midpoint-rule integral of a cell field over the box."""
    return float(np.sum(f) * grid.cell_volume)


def gradient(grid: Grid, f: Field) -> Points:
    """Central-difference cell gradient with mirrored ghost cells.

    Returns:
        Array of shape ``(*grid.shape, d)``.
    """
    f = np.asarray(f, dtype=float)
    padded = np.pad(f, 1, mode="reflect")
    components = []
    for axis, h in enumerate(grid.spacing):
        upper = [slice(1, -1)] * grid.dimension
        lower = [slice(1, -1)] * grid.dimension
        upper[axis] = slice(2, None)
        lower[axis] = slice(None, -2)
        components.append((padded[tuple(upper)] - padded[tuple(lower)]) / (2.0 * h))
    return np.stack(components, axis=-1)


def face_gradients(grid: Grid, f: Field) -> list[Field]:
    """Two-point differences across interior faces, one array per axis."""
    f = np.asarray(f, dtype=float)
    return [np.diff(f, axis=axis) / h for axis, h in enumerate(grid.spacing)]


def flux_divergence(grid: Grid, fluxes: list[Field]) -> Field:
    """Divergence of face fluxes; each flux array carries its boundary faces."""
    out = np.zeros(grid.shape)
    for axis, (flux, h) in enumerate(zip(fluxes, grid.spacing)):
        if flux.shape[axis] != grid.cells[axis] + 1:
            raise GridError(
                f"Flux along axis {axis} must have {grid.cells[axis] + 1} faces, "
                f"got {flux.shape[axis]}"
            )
        out += np.diff(flux, axis=axis) / h
    return out


def _pad_faces(interior: Field, axis: int) -> Field:
    width = [(0, 0)] * interior.ndim
    width[axis] = (1, 1)
    return np.pad(interior, width)


def apply_laplacian(grid: Grid, u: Field) -> Field:
    """Neumann Laplacian as a divergence of zero-boundary face differences.

    Constant fields map to exactly zero.
    """
    fluxes = [_pad_faces(g, axis) for axis, g in enumerate(face_gradients(grid, u))]
    return flux_divergence(grid, fluxes)


@lru_cache(maxsize=32)
def neumann_laplacian(grid: Grid) -> sps.csr_matrix:
    """Sparse Neumann Laplacian acting on C-order flattened cell fields."""

    def one_axis(n: int, h: float) -> sps.spmatrix:
        main = -2.0 * np.ones(n)
        main[0] = main[-1] = -1.0
        off = np.ones(n - 1)
        return sps.diags([off, main, off], [-1, 0, 1]) / (h * h)

    blocks = [one_axis(n, h) for n, h in zip(grid.cells, grid.spacing)]
    if grid.dimension == 1:
        return sps.csr_matrix(blocks[0])
    eye0 = sps.identity(grid.cells[0])
    eye1 = sps.identity(grid.cells[1])
    return sps.csr_matrix(sps.kron(blocks[0], eye1) + sps.kron(eye0, blocks[1]))


def dirichlet_energy(grid: Grid, f: Field) -> float:
    """Discrete ``∫|∇f|²`` summed over interior faces."""
    return float(
        sum(np.sum(g * g) for g in face_gradients(grid, f)) * grid.cell_volume
    )


def mixed_norm(
    grid: Grid,
    samples: Field,
    dt: float | np.ndarray,
    q1: float,
    q2: float,
) -> float:
    """Space-time norm ``(Σ_t dt [Σ_x |F|^q1 |cell|]^{q2/q1})^{1/q2}``.

    Args:
        grid: Spatial grid of every sample.
        samples: Array of shape ``(K, *grid.shape)``, one slice per time level.
        dt: Time weight of each slice (scalar or length-K array).
        q1: Spatial exponent in (0, inf].
        q2: Temporal exponent in (0, inf].

    Raises:
        InvalidExponentError: If an exponent is not positive.
    """
    for name, q in (("q1", q1), ("q2", q2)):
        if not q > 0:
            raise InvalidExponentError(f"{name} must be positive, got {q}")

    values = np.abs(np.asarray(samples, dtype=float)).reshape(len(samples), -1)
    if math.isinf(q1):
        inner = values.max(axis=1)
    else:
        inner = (np.sum(values**q1, axis=1) * grid.cell_volume) ** (1.0 / q1)

    if math.isinf(q2):
        return float(inner.max())
    weights = np.broadcast_to(np.asarray(dt, dtype=float), inner.shape)
    return float(np.sum(weights * inner**q2) ** (1.0 / q2))
