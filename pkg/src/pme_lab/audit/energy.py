"""L^q energy and entropy audits of drifted trajectories."""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.optimize import brentq

from pme_lab.audit.report import GROWTH_ALLOWANCE, AuditEntry, compare_refinement
from pme_lab.audit.sampling import (
    dissipation_integral,
    dissipation_series,
    drift_time_integral,
    require_fields,
)
from pme_lab.drift.fields import VectorFieldSpec
from pme_lab.exceptions import InvalidExponentError
from pme_lab.measures.norms import abs_entropy, entropy, power_integral
from pme_lab.trajectory import TrajectoryRecord
from pme_lab.types import DriftStructure

__all__ = [
    "audit_energy",
    "audit_energy_family",
    "audit_entropy",
    "drift_energy_coefficient",
    "family_exponents",
    "fit_gronwall_constant",
    "MONOTONE_SLACK",
]

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-6
FAMILY_START = 1.25
FAMILY_STEP = 0.25


def drift_energy_coefficient(m: float, q: float) -> float:
    """``2qm(q−1)/(q+m−1)²``: half of the drift-free coefficient, the rest absorbs the drift."""
    return 2.0 * q * m * (q - 1.0) / (q + m - 1.0) ** 2


def fit_gronwall_constant(lhs: float, initial: float, drift_integral: float) -> float:
    """Smallest ``C >= 0`` with ``lhs <= (initial + C)·exp(C·drift_integral)``."""

    def gap(c: float) -> float:
        return (initial + c) * math.exp(c * drift_integral) - lhs

    if gap(0.0) >= 0:
        return 0.0
    upper = max(1.0, lhs - initial)
    while gap(upper) < 0:
        upper *= 2.0
    return float(brentq(gap, 0.0, upper, xtol=1e-14, rtol=1e-12))


def _energy_series(trajectory: TrajectoryRecord, m: float, q: float) -> tuple[np.ndarray, np.ndarray]:
    """``∫ρ^q`` per recorded time and ``c_q``-weighted dissipation per step."""
    values = np.array([power_integral(f, q) for f in trajectory.fields])
    per_step = drift_energy_coefficient(m, q) * dissipation_series(trajectory, (q + m - 1.0) / 2.0)
    return values, per_step


def audit_energy(
    trajectory: TrajectoryRecord,
    m: float,
    q: float,
    structure: DriftStructure | str = DriftStructure.GENERAL,
    V: VectorFieldSpec | None = None,
    q1: float = math.inf,
    q2: float = 2.0,
    name: str | None = None,
    refined: TrajectoryRecord | None = None,
    refined_drift: VectorFieldSpec | None = None,
    growth: float = GROWTH_ALLOWANCE,
) -> AuditEntry:
    """Check ``sup_t ∫ρ^q + c_q∬|∇ρ^{(q+m−1)/2}|²`` against its bound.

    With a nonnegative divergence the bound is ``∫ρ₀^q`` and ``∫ρ^q`` must
    not grow by more than 1e-6 per step. Otherwise the Grönwall form
    ``(∫ρ₀^q + C)·exp(C·Σdt‖V‖_{q1}^{q2})`` is fitted for ``C`` on both
    ``trajectory`` and ``refined``, the same problem on a finer grid; the
    audit passes only when the refined constant grows by at most ``growth``.
    Without ``refined`` the general form fails. ``q = 1`` is routed to
    :func:`audit_entropy`.

    Raises:
        AuditError: If the trajectory has fewer than two fields.
        InvalidExponentError: If ``q < 1``.
    """
    if q == 1:
        return audit_entropy(trajectory, m, V=V, q1=q1, q2=q2)
    if not q > 1:
        raise InvalidExponentError(f"Energy audit needs q >= 1, got {q}")
    require_fields(trajectory)
    structure = DriftStructure(structure)

    values, per_step = _energy_series(trajectory, m, q)
    dissipation = float(per_step.sum())
    sup = float(values.max())
    lhs = sup + dissipation
    initial = float(values[0])
    increments = np.diff(values)
    worst = float(increments.max())
    label = name or f"energy[q={q:g}]"

    if structure is DriftStructure.DIV_NONNEG:
        # running balance ∫ρ^q(t) + c_q∫_0^t D <= ∫ρ₀^q at every recorded time
        balance = float(np.max(values + np.cumsum(per_step)))
        slack = min(MONOTONE_SLACK - worst, initial + MONOTONE_SLACK - balance)
        return AuditEntry(
            name=label,
            lhs=balance,
            rhs_terms={"initial": initial},
            constant=1.0,
            passed=slack >= 0,
            slack=slack,
            metadata={
                "q": q,
                "structure": structure.value,
                "sup_lq": sup,
                "dissipation": dissipation,
                "max_increment": worst,
            },
        )

    drift_integral = drift_time_integral(V, trajectory, q1, q2)
    constant = fit_gronwall_constant(lhs, initial, drift_integral)
    logger.debug(f"Grönwall fit at q={q:g}: C={constant:.4g}, drift integral {drift_integral:.4g}")
    metadata: dict[str, object] = {
        "q": q,
        "structure": structure.value,
        "sup_lq": sup,
        "dissipation": dissipation,
        "max_increment": worst,
        "q1": q1,
        "q2": q2,
    }
    finite = math.isfinite(constant) and math.isfinite(lhs)

    if refined is None:
        logger.warning(f"{label}: no refined run, the fitted constant {constant:.4g} is not judged")
        metadata["refinement"] = "missing"
        passed, slack = False, -math.inf
    else:
        fine_values, fine_steps = _energy_series(refined, m, q)
        fine_lhs = float(fine_values.max() + fine_steps.sum())
        fine_integral = drift_time_integral(refined_drift or V, refined, q1, q2)
        fine_constant = fit_gronwall_constant(fine_lhs, float(fine_values[0]), fine_integral)
        check = compare_refinement(constant, fine_constant, growth)
        metadata.update(
            {
                "refinement": "compared",
                "refined_constant": fine_constant,
                "growth": check.growth,
                "allowance": check.allowance,
                "refined_cells": list(refined.grid.cells),
                "refined_steps": len(refined) - 1,
            }
        )
        passed = finite and check.passed
        slack = check.allowance - check.growth

    return AuditEntry(
        name=label,
        lhs=lhs,
        rhs_terms={"initial": initial, "drift_integral": drift_integral},
        constant=constant,
        passed=passed,
        slack=slack,
        metadata=metadata,
    )


def family_exponents(m: float, q: float) -> list[float]:
    """``max(1.25, m−1), …, q`` in steps of 0.25, always ending at ``q``."""
    start = max(FAMILY_START, m - 1.0)
    if q < start:
        return [q]
    count = int(math.floor((q - start) / FAMILY_STEP + 1e-9))
    rs = [start + FAMILY_STEP * k for k in range(count + 1)]
    if q - rs[-1] > 1e-9:
        rs.append(q)
    return rs


def audit_energy_family(
    trajectory: TrajectoryRecord,
    m: float,
    q: float,
    structure: DriftStructure | str = DriftStructure.GENERAL,
    V: VectorFieldSpec | None = None,
    q1: float = math.inf,
    q2: float = 2.0,
    refined: TrajectoryRecord | None = None,
    refined_drift: VectorFieldSpec | None = None,
    growth: float = GROWTH_ALLOWANCE,
) -> list[AuditEntry]:
    """:func:`audit_energy` for every ``r`` of :func:`family_exponents`."""
    return [
        audit_energy(
            trajectory,
            m,
            r,
            structure,
            V,
            q1,
            q2,
            name=f"energy[r={r:g}]",
            refined=refined,
            refined_drift=refined_drift,
            growth=growth,
        )
        for r in family_exponents(m, q)
    ]


def audit_entropy(
    trajectory: TrajectoryRecord,
    m: float,
    V: VectorFieldSpec | None = None,
    q1: float = math.inf,
    q2: float = 2.0,
) -> AuditEntry:
    """``sup_t ∫ρ|log ρ|`` and ``(2/m)∬|∇ρ^{m/2}|²`` with a fitted constant.

    The constant is ``sup∫ρ|log ρ|`` over ``∫ρ₀|log ρ₀| + Σdt‖V‖^{q2}``;
    both vanish for uniform data without drift and the constant is then 0.
    The Jensen floor ``∫ρ log ρ >= −log|Ω|`` is checked at every time.
    """
    require_fields(trajectory)
    grid = trajectory.grid
    signed = np.array([entropy(f) for f in trajectory.fields])
    absolute = np.array([abs_entropy(f) for f in trajectory.fields])
    dissipation = (2.0 / m) * dissipation_integral(trajectory, m / 2.0)
    drift_integral = drift_time_integral(V, trajectory, q1, q2)

    sup = float(absolute.max())
    scale = float(absolute[0]) + drift_integral
    if scale > 0:
        constant = sup / scale
    else:
        constant = 0.0 if sup <= 1e-12 else math.inf

    masses = trajectory.masses()
    floor = masses * np.log(masses / grid.volume)
    floor_gap = float(np.min(signed - floor))
    finite = math.isfinite(sup) and math.isfinite(dissipation)

    return AuditEntry(
        name="entropy",
        lhs=sup + dissipation,
        rhs_terms={"initial": float(absolute[0]), "drift_integral": drift_integral},
        constant=constant,
        passed=finite and math.isfinite(constant) and floor_gap >= -1e-12,
        slack=floor_gap,
        metadata={
            "sup_abs_entropy": sup,
            "dissipation": dissipation,
            "entropy_nonincreasing": bool(np.all(np.diff(signed) <= 1e-8)),
            "min_entropy": float(signed.min()),
        },
    )
