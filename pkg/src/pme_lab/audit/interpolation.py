"""Mixed-norm interpolation, parabolic embedding and compactness products."""

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
from pme_lab.classes.exponents import gamma_1, gamma_2, q_md, reciprocal
from pme_lab.classes.theorems import ClassQuery, theorem_admissible
from pme_lab.drift.fields import VectorFieldSpec
from pme_lab.exceptions import InadmissibleWindowError
from pme_lab.geometry.grid import gradient, mixed_norm
from pme_lab.trajectory import TrajectoryRecord
from pme_lab.types import TheoremId

__all__ = [
    "check_window",
    "window_r2",
    "audit_interpolation",
    "audit_parabolic_embedding",
    "audit_compactness",
    "holder_conjugate",
]

logger = logging.getLogger(__name__)

WINDOW_RTOL = 1e-9


def window_r2(m: float, q: float, d: int, r1: float) -> float:
    """``r2`` on the line ``d/r1 + (2+Q)/r2 = d/q``; ``∞`` at ``r1 = q``."""
    rest = d / q - d * reciprocal(r1)
    if rest <= 0:
        return math.inf
    return (2.0 + q_md(m, d, q)) / rest


def check_window(m: float, q: float, d: int, r1: float, r2: float) -> None:
    """Reject ``(r1, r2)`` outside the interpolation window of ``(m, q, d)``.

    Raises:
        InadmissibleWindowError: Naming the first violated bound.
    """
    Q = q_md(m, d, q)
    lhs = d * reciprocal(r1) + (2.0 + Q) * reciprocal(r2)
    if abs(lhs - d / q) > WINDOW_RTOL * max(1.0, d / q):
        raise InadmissibleWindowError(
            f"(r1, r2) = ({r1:g}, {r2:g}) is off the line d/r1 + (2+Q)/r2 = d/q "
            f"(left side {lhs:.6g}, right side {d / q:.6g})",
            bound="d/r1 + (2+Q)/r2 = d/q",
        )
    if r1 < q * (1 - WINDOW_RTOL):
        raise InadmissibleWindowError(f"r1 = {r1:g} is below q = {q:g}", bound="r1 >= q")

    low_r2 = q + m - 1.0
    if d > 2:
        top = d * (q + m - 1.0) / (d - 2.0)
        if r1 > top * (1 + WINDOW_RTOL):
            raise InadmissibleWindowError(
                f"r1 = {r1:g} exceeds d(q+m-1)/(d-2) = {top:g}", bound="r1 <= d(q+m-1)/(d-2)"
            )
    if d == 2:
        if math.isinf(r1):
            raise InadmissibleWindowError("r1 must be finite in two dimensions", bound="r1 < inf")
        if r2 <= low_r2:
            raise InadmissibleWindowError(
                f"r2 = {r2:g} must exceed q+m-1 = {low_r2:g}", bound="r2 > q+m-1"
            )
    elif r2 < low_r2 * (1 - WINDOW_RTOL):
        raise InadmissibleWindowError(
            f"r2 = {r2:g} is below q+m-1 = {low_r2:g}", bound="r2 >= q+m-1"
        )


def _density_norm(trajectory: TrajectoryRecord, r1: float, r2: float) -> float:
    return mixed_norm(trajectory.grid, trajectory.stack(), time_weights(trajectory), r1, r2)


def audit_interpolation(
    trajectory: TrajectoryRecord,
    m: float,
    q: float,
    r1: float,
    r2: float | None = None,
    constant: float | None = None,
) -> AuditEntry:
    """``‖ρ‖_{r1,r2} <= c·(A + B)`` with the two terms of the interpolation bound.

    ``A = (sup∫ρ^q)^{(1/r1)[1 − (r1−q)(d−2)₊/(d(m−1)+2q)]}·‖∇ρ^{(q+m−1)/2}‖₂^{2/r2}``
    and ``B = |Ω|^{1/r1−1}(∫‖ρ‖₁^{r2})^{1/r2}``. ``r2`` defaults to the value
    on the scaling line. With ``constant`` given (fitted on a family of runs)
    the audit checks the inequality with that constant; otherwise it fits
    one. The computable companions ``‖∇ρ^m‖_{γ₁}`` and ``‖∇ρ^q‖`` are
    reported as metadata.

    Raises:
        InadmissibleWindowError: If ``(r1, r2)`` is outside the window.
    """
    require_fields(trajectory)
    grid = trajectory.grid
    d = grid.dimension
    if r2 is None:
        r2 = window_r2(m, q, d, r1)
    check_window(m, q, d, r1, r2)

    lhs = _density_norm(trajectory, r1, r2)
    sup = sup_power_integral(trajectory, q)
    dissipation = dissipation_integral(trajectory, (q + m - 1.0) / 2.0)
    if math.isinf(r1):
        exponent = 0.0
    else:
        exponent = (1.0 / r1) * (1.0 - (r1 - q) * max(0, d - 2) / (d * (m - 1.0) + 2.0 * q))
    first = sup**exponent * dissipation ** reciprocal(r2)

    masses = trajectory.masses()
    weights = time_weights(trajectory)
    if math.isinf(r2):
        mass_term = float(masses.max())
    else:
        mass_term = float(np.sum(weights * masses**r2)) ** (1.0 / r2)
    second = grid.volume ** (reciprocal(r1) - 1.0) * mass_term

    rhs = first + second
    fitted = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    if constant is None:
        passed = math.isfinite(fitted)
        slack = 0.0
        used = fitted
    else:
        passed = lhs <= constant * rhs * (1 + 1e-9)
        slack = constant * rhs - lhs
        used = constant

    g1 = gamma_1(m, d, q)
    stack = trajectory.stack()
    grad_m = np.stack([np.linalg.norm(gradient(grid, f**m), axis=-1) for f in stack])
    grad_q = np.stack([np.linalg.norm(gradient(grid, f**q), axis=-1) for f in stack])
    gq_exp = (d * (q + m - 1.0) + 2.0 * q) / (q * (d + 1.0))

    return AuditEntry(
        name=f"interpolation[r1={r1:g},r2={r2:g}]",
        lhs=lhs,
        rhs_terms={"energy_term": first, "mass_term": second},
        constant=used,
        passed=passed,
        slack=slack,
        metadata={
            "r1": r1,
            "r2": r2,
            "fitted_constant": fitted,
            "grad_rho_m_gamma1": mixed_norm(grid, grad_m, weights, g1, g1),
            "grad_rho_q": mixed_norm(grid, grad_q, weights, gq_exp, gq_exp),
        },
    )


def audit_parabolic_embedding(trajectory: TrajectoryRecord, m: float, q: float) -> AuditEntry:
    """``∬ρ^{q+m−1+2q/d}`` against ``sup∫ρ^q + ∬|∇ρ^{(q+m−1)/2}|²``."""
    require_fields(trajectory)
    grid = trajectory.grid
    d = grid.dimension
    power = q + m - 1.0 + 2.0 * q / d
    weights = time_weights(trajectory)
    lhs = float(sum(w * np.sum(f.values**power) for w, f in zip(weights, trajectory.fields)) * grid.cell_volume)
    sup = sup_power_integral(trajectory, q)
    dissipation = dissipation_integral(trajectory, (q + m - 1.0) / 2.0)
    rhs = sup + dissipation
    constant = lhs / rhs if rhs > 0 else math.inf
    return AuditEntry(
        name="parabolic_embedding",
        lhs=lhs,
        rhs_terms={"sup_lq": sup, "dissipation": dissipation},
        constant=constant,
        passed=math.isfinite(lhs) and math.isfinite(constant),
        slack=0.0,
        metadata={"power": power},
    )


def holder_conjugate(gamma: float, q1: float, scale: float = 1.0) -> float:
    """``scale·γ·q1/(q1−γ)``; ``scale·γ`` for infinite ``q1``.

    Raises:
        InadmissibleWindowError: If ``q1 <= γ``.
    """
    if math.isinf(q1):
        return scale * gamma
    if q1 <= gamma:
        raise InadmissibleWindowError(
            f"Exponent {q1:g} must exceed γ = {gamma:g} for a Hölder split", bound="q > gamma"
        )
    return scale * gamma * q1 / (q1 - gamma)


def audit_compactness(
    trajectory: TrajectoryRecord,
    m: float,
    q: float,
    V: VectorFieldSpec,
    q1: float,
    q2: float,
) -> list[AuditEntry]:
    """Hölder products ``‖Vρ‖_{γ₁}`` and ``‖Vρ^q‖_{γ₂}`` against their bounds.

    ``‖Vρ‖_{γ₁} <= ‖V‖_{q1,q2}‖ρ‖_{r1,r2}`` is audited for ``q <= m+1`` and
    ``‖Vρ^q‖_{γ₂} <= ‖V‖_{q1,q2}‖ρ‖_{r1,r2}^q`` for ``q >= max(1, m−1)``,
    each with its Hölder-conjugate ``(r1, r2)``. Both are exact discrete
    Hölder inequalities, so they hold with constant 1 up to round-off.
    Whether ``(q1, q2)`` lies in the compactness window is reported, not
    required.
    """
    require_fields(trajectory)
    grid = trajectory.grid
    d = grid.dimension
    weights = time_weights(trajectory)
    magnitudes = drift_magnitudes(V, trajectory)
    stack = trajectory.stack()
    v_norm = mixed_norm(grid, magnitudes, weights, q1, q2)

    entries: list[AuditEntry] = []
    cases = []
    if q <= m + 1.0:
        cases.append(("compactness_linear", gamma_1(m, d, q), 1.0, TheoremId.COMPACT_LINEAR))
    if q >= max(1.0, m - 1.0):
        cases.append(("compactness_power", gamma_2(m, d, q), q, TheoremId.COMPACT_POWER))

    for name, gamma, power, theorem in cases:
        r1 = holder_conjugate(gamma, q1, power)
        r2 = holder_conjugate(gamma, q2, power)
        lhs = mixed_norm(grid, magnitudes * stack**power, weights, gamma, gamma)
        rho_norm = mixed_norm(grid, stack, weights, r1, r2)
        rhs = v_norm * rho_norm**power
        window = None
        if d >= 2:
            window = theorem_admissible(ClassQuery(m, q, d, q1, q2, theorem)).admissible
        entries.append(
            AuditEntry(
                name=name,
                lhs=lhs,
                rhs_terms={"drift_norm": v_norm, "density_norm": rho_norm},
                constant=lhs / rhs if rhs > 0 else 0.0,
                passed=lhs <= rhs * (1 + 1e-9) + 1e-300,
                slack=rhs - lhs,
                metadata={"gamma": gamma, "r1": r1, "r2": r2, "window_admissible": window},
            )
        )
        logger.debug(f"{name}: {lhs:.4e} <= {rhs:.4e}")
    return entries
