"""Speed estimate for ``w = ∇ρ^m/ρ`` and the drift speed."""

from __future__ import annotations

import logging
import math

import numpy as np

from pme_lab.audit.report import AuditEntry
from pme_lab.audit.sampling import (
    dissipation_integral,
    drift_magnitudes,
    require_fields,
    sup_power_integral,
    time_weights,
)
from pme_lab.classes.exponents import lambda_q
from pme_lab.drift.fields import VectorFieldSpec
from pme_lab.geometry.grid import Grid, gradient
from pme_lab.trajectory import TrajectoryRecord
from pme_lab.types import Field

__all__ = [
    "audit_speed",
    "speed_field",
    "speed_identity_residual",
    "speed_theta",
    "speed_beta",
    "VACUUM",
    "EPSILONS",
]

logger = logging.getLogger(__name__)

VACUUM = 1e-12
EPSILONS = (0.5, 0.1)


def speed_field(grid: Grid, values: Field, m: float) -> tuple[Field, np.ndarray]:
    """``|mρ^{m−2}∇ρ|`` per cell and the mask of non-vacuum cells.

    Vacuum cells (``ρ < 1e-12``) get speed 0.
    """
    occupied = values >= VACUUM
    safe = np.where(occupied, values, 1.0)
    grad = gradient(grid, values)
    w = m * safe ** (m - 2.0) * np.linalg.norm(grad, axis=-1)
    return np.where(occupied, w, 0.0), occupied


def speed_identity_residual(grid: Grid, values: Field, m: float) -> float:
    """Largest relative cellwise gap in ``|w|²ρ = (2m/(2m−1))²|∇ρ^{(2m−1)/2}|²``.

    Both sides use the chain rule on the same stencil gradient, so the gap
    is round-off only.
    """
    w, occupied = speed_field(grid, values, m)
    safe = np.where(occupied, values, 1.0)
    grad = np.linalg.norm(gradient(grid, values), axis=-1)
    p = (2.0 * m - 1.0) / 2.0
    lifted = p * safe ** (p - 1.0) * grad
    left = np.where(occupied, w * w * values, 0.0)
    right = np.where(occupied, (2.0 * m / (2.0 * m - 1.0)) ** 2 * lifted * lifted, 0.0)
    scale = max(1.0, float(np.max(np.abs(left))))
    return float(np.max(np.abs(left - right))) / scale


def speed_theta(m: float, q: float, d: int) -> float:
    """Exponent ``θ`` of the interpolation behind the speed bound; 0 once ``λ_q = 2``."""
    lam = lambda_q(m, q, d)
    if lam >= 2.0:
        return 0.0
    return d * lam * (m - q) / ((2.0 - lam) * ((d + 2.0) * q + (m - 2.0) * d))


def speed_beta(m: float, q: float, d: int, q1: float) -> float:
    lam = lambda_q(m, q, d)
    if math.isinf(q1):
        return 1.0 - (d - 2.0) * (1.0 - q) / (d * (m - 1.0) + 2.0 * q)
    return 1.0 - (d - 2.0) * (q1 * (1.0 - q) + q * lam) / ((q1 - lam) * (d * (m - 1.0) + 2.0 * q))


def audit_speed(
    trajectory: TrajectoryRecord,
    m: float,
    q: float,
    V: VectorFieldSpec | None = None,
    q1: float = math.inf,
    epsilons: tuple[float, ...] = EPSILONS,
) -> AuditEntry:
    """Fit the speed bound ``∬|w|^λρ <= ε∬|∇ρ^{(q+m−1)/2}|² + C·T·(sup∫ρ^q)^power``.

    ``λ = λ_q(m, q, d)`` and ``power = 2θ/(d(1−θ))``. One constant is fitted
    per ``ε``; ``constant`` reports the largest. At ``q = m`` the cellwise
    identity residual is checked against 1e-10 as well.
    """
    require_fields(trajectory)
    grid = trajectory.grid
    d = grid.dimension
    lam = lambda_q(m, q, d)
    theta = speed_theta(m, q, d)
    power = 2.0 * theta / (d * (1.0 - theta)) if theta < 1 else math.inf

    weights = time_weights(trajectory)
    speed = 0.0
    for w_t, f in zip(weights, trajectory.fields):
        if w_t == 0:
            continue
        w, _ = speed_field(grid, f.values, m)
        speed += w_t * float(np.sum(w**lam * f.values)) * grid.cell_volume

    drift_speed = 0.0
    if V is not None:
        magnitudes = drift_magnitudes(V, trajectory)
        for w_t, f, mag in zip(weights, trajectory.fields, magnitudes):
            drift_speed += w_t * float(np.sum(mag**lam * f.values)) * grid.cell_volume

    dissipation = dissipation_integral(trajectory, (q + m - 1.0) / 2.0)
    sup = sup_power_integral(trajectory, q)
    horizon = float(trajectory.times[-1] - trajectory.times[0])
    scale = horizon * sup**power if math.isfinite(power) else math.inf

    constants: dict[str, float] = {}
    for eps in epsilons:
        excess = max(0.0, speed - eps * dissipation)
        if excess == 0:
            constants[f"{eps:g}"] = 0.0
        elif scale > 0 and math.isfinite(scale):
            constants[f"{eps:g}"] = excess / scale
        else:
            constants[f"{eps:g}"] = math.inf
    constant = max(constants.values()) if constants else 0.0

    identity = None
    passed = math.isfinite(speed) and math.isfinite(drift_speed) and math.isfinite(constant)
    if abs(q - m) <= 1e-12:
        identity = max(speed_identity_residual(grid, f.values, m) for f in trajectory.fields)
        passed = passed and identity <= 1e-10

    logger.debug(f"Speed audit λ={lam:g}: ∬|w|^λρ={speed:.4e}, ∬|V|^λρ={drift_speed:.4e}")
    return AuditEntry(
        name="speed",
        lhs=speed,
        rhs_terms={"dissipation": dissipation, "sup_lq": sup, "horizon": horizon, "drift_speed": drift_speed},
        constant=constant,
        passed=passed,
        slack=0.0 if identity is None else 1e-10 - identity,
        metadata={
            "lambda_q": lam,
            "theta": theta,
            "beta": speed_beta(m, q, d, q1),
            "power": power,
            "constants": constants,
            "identity_residual": identity,
        },
    )
