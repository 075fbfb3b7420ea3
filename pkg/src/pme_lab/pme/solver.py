"""Backward-Euler finite-volume solver for ``∂ₜϱ = Δϱ^m`` with no-flux boundary.

One step solves ``ϱ⁺ − dt·Δ_h (ϱ⁺)^m = rhs`` for ``ϱ⁺`` by damped Newton.
The discrete Laplacian is the divergence of two-point face differences of
``u = ϱ^m`` with zero boundary flux, so every step conserves mass up to the
Newton residual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import spsolve

from pme_lab.exceptions import ConfigError, SolverError
from pme_lab.geometry.grid import Grid, apply_laplacian, neumann_laplacian
from pme_lab.measures.density import DensityField
from pme_lab.trajectory import TrajectoryRecord
from pme_lab.types import Field

__all__ = [
    "PmeStepConfig",
    "NewtonReport",
    "solve_implicit_diffusion",
    "pme_step",
    "pme_trajectory",
]

logger = logging.getLogger(__name__)

MASS_RTOL = 1e-12
MIN_DAMPING = 1.0 / 64.0


@dataclass(frozen=True)
class PmeStepConfig:
    """Parameters of one implicit PME step."""

    m: float
    dt: float
    tol: float = 1e-10
    max_iter: int = 50

    def __post_init__(self) -> None:
        if not self.m > 1:
            raise ConfigError(f"PME exponent m must exceed 1, got {self.m}")
        if not self.dt > 0:
            raise ConfigError(f"Time step must be positive, got {self.dt}")
        if not self.tol > 0:
            raise ConfigError(f"Newton tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class NewtonReport:
    iterations: int = 0
    history: list[float] = field(default_factory=list)
    clipped_mass: float = 0.0


def _residual(grid: Grid, rho: Field, rhs: Field, m: float, dt: float) -> Field:
    return rho - rhs - dt * apply_laplacian(grid, rho**m)


def solve_implicit_diffusion(
    grid: Grid,
    rhs: Field,
    cfg: PmeStepConfig,
    initial_guess: Field | None = None,
) -> tuple[Field, NewtonReport]:
    """Solve ``ρ − dt·Δ_h ρ^m = rhs`` with ``ρ ≥ 0``.

    Args:
        grid: Grid of ``rhs``.
        rhs: Right-hand side; nonnegative up to round-off.
        cfg: Exponent, step and Newton controls.
        initial_guess: Starting iterate, ``rhs`` by default.

    Returns:
        The solution and a :class:`NewtonReport`.

    Raises:
        SolverError: If Newton does not converge or clipping destroys mass.
    """
    rhs = np.asarray(rhs, dtype=float)
    rho = np.maximum(rhs if initial_guess is None else initial_guess, 0.0).copy()
    target_mass = float(np.sum(rhs))
    lap = neumann_laplacian(grid)
    identity = sps.identity(grid.size, format="csr")
    report = NewtonReport()

    res = _residual(grid, rho, rhs, cfg.m, cfg.dt)
    norm = float(np.max(np.abs(res)))
    report.history.append(norm)

    def converged(values: Field, residual_norm: float) -> bool:
        defect = abs(float(np.sum(values)) - target_mass)
        return residual_norm <= cfg.tol and defect <= MASS_RTOL * max(abs(target_mass), 1.0)

    while not converged(rho, norm):
        if report.iterations >= cfg.max_iter:
            raise SolverError(
                f"Newton did not converge in {cfg.max_iter} iterations "
                f"(residual {norm:.3e})",
                history=report.history,
            )
        slope = cfg.m * rho.reshape(-1) ** (cfg.m - 1.0)
        jac = identity - cfg.dt * (lap @ sps.diags(slope))
        delta = spsolve(sps.csc_matrix(jac), res.reshape(-1)).reshape(grid.shape)

        theta = 1.0
        while True:
            raw = rho - theta * delta
            candidate = np.maximum(raw, 0.0)
            cand_res = _residual(grid, candidate, rhs, cfg.m, cfg.dt)
            cand_norm = float(np.max(np.abs(cand_res)))
            if cand_norm < norm or theta <= MIN_DAMPING:
                break
            theta *= 0.5

        report.clipped_mass = float(-np.sum(np.minimum(raw, 0.0)))
        rho, res, norm = candidate, cand_res, cand_norm
        report.iterations += 1
        report.history.append(norm)
        logger.debug(
            f"Newton iteration {report.iterations}: residual {norm:.3e}, damping {theta:g}"
        )

        if report.iterations >= 3 and norm >= report.history[-3] and norm > cfg.tol:
            raise SolverError(
                f"Newton stalled at residual {norm:.3e}", history=report.history
            )

    if report.clipped_mass > MASS_RTOL * max(abs(target_mass), 1.0):
        raise SolverError(
            f"Positivity clipping removed mass {report.clipped_mass:.3e}",
            history=report.history,
        )
    return rho, report


def pme_step(rho: DensityField, cfg: PmeStepConfig) -> DensityField:
    """Advance ``ρ`` by one implicit step of the homogeneous PME."""
    values, _ = solve_implicit_diffusion(rho.grid, rho.values, cfg)
    return rho.with_values(values, rho.time + cfg.dt)


def pme_trajectory(rho0: DensityField, cfg: PmeStepConfig, steps: int) -> TrajectoryRecord:
    """Repeated :func:`pme_step`, recording mass and Newton iterations."""
    record = TrajectoryRecord.starting_at(rho0)
    rho = rho0
    for _ in range(steps):
        values, report = solve_implicit_diffusion(rho.grid, rho.values, cfg)
        rho = rho.with_values(values, rho.time + cfg.dt)
        record.append(
            rho,
            {"mass": rho.mass, "newton_iterations": report.iterations},
        )
    logger.debug(f"PME trajectory: {steps} steps to t={rho.time:g}")
    return record
