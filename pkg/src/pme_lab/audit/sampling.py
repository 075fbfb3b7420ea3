"""Space-time samples shared by the audits.

Time integrals use the right-endpoint rule of the implicit schemes: the
field recorded at ``t_k`` carries weight ``t_k − t_{k−1}`` and the initial
field carries none.
"""

from __future__ import annotations

import math

import numpy as np

from pme_lab.drift.fields import VectorFieldSpec
from pme_lab.exceptions import AuditError, GridError
from pme_lab.geometry.grid import dirichlet_energy, mixed_norm
from pme_lab.measures.norms import power_integral
from pme_lab.trajectory import TrajectoryRecord

__all__ = [
    "require_fields",
    "time_weights",
    "drift_magnitudes",
    "drift_class_norm",
    "drift_time_integral",
    "dissipation_integral",
    "dissipation_series",
    "sup_power_integral",
]


def require_fields(trajectory: TrajectoryRecord, minimum: int = 2) -> None:
    if len(trajectory) < minimum:
        raise AuditError(f"Audit needs at least {minimum} recorded fields, got {len(trajectory)}")


def time_weights(trajectory: TrajectoryRecord) -> np.ndarray:
    """Length-K weights: 0 for the initial field, the step length otherwise."""
    return np.concatenate([[0.0], trajectory.steps])


def drift_magnitudes(V: VectorFieldSpec, trajectory: TrajectoryRecord) -> np.ndarray:
    """``|V(x_i, t_k)|`` at cell centres for every recorded time, shape ``(K, *grid.shape)``."""
    grid = trajectory.grid
    if V.dimension != grid.dimension:
        raise GridError(f"Drift '{V.name}' is {V.dimension}D, grid is {grid.dimension}D")
    return np.stack([np.linalg.norm(V(grid.centers, t), axis=-1) for t in trajectory.times])


def drift_class_norm(V: VectorFieldSpec, trajectory: TrajectoryRecord, q1: float, q2: float) -> float:
    """``‖V‖_{L^{q1,q2}}`` over the recorded window."""
    return mixed_norm(
        trajectory.grid, drift_magnitudes(V, trajectory), time_weights(trajectory), q1, q2
    )


def drift_time_integral(
    V: VectorFieldSpec | None,
    trajectory: TrajectoryRecord,
    q1: float = math.inf,
    q2: float = 2.0,
) -> float:
    """``Σ_k dt_k ‖V(t_k)‖_{q1}^{q2}``; zero without a drift."""
    if V is None:
        return 0.0
    grid = trajectory.grid
    weights = time_weights(trajectory)
    total = 0.0
    for w, sample in zip(weights, drift_magnitudes(V, trajectory)):
        if w == 0:
            continue
        spatial = mixed_norm(grid, sample[None], 1.0, q1, math.inf)
        total += w * spatial**q2
    return float(total)


def dissipation_series(trajectory: TrajectoryRecord, power: float) -> np.ndarray:
    """Per-field ``dt_k ∫|∇ρ_k^power|²``, zero for the initial field."""
    grid = trajectory.grid
    out = np.zeros(len(trajectory))
    for k, (dt, f) in enumerate(zip(trajectory.steps, trajectory.fields[1:]), start=1):
        out[k] = dt * dirichlet_energy(grid, f.values**power)
    return out


def dissipation_integral(trajectory: TrajectoryRecord, power: float) -> float:
    """``Σ_k dt_k ∫|∇ρ_k^power|²`` over interior faces."""
    return float(dissipation_series(trajectory, power).sum())


def sup_power_integral(trajectory: TrajectoryRecord, q: float) -> float:
    return max(power_integral(f, q) for f in trajectory.fields)
