"""Reduce an exponent triple from a looser hypothesis to a tighter one.

On a bounded space-time cylinder ``L^{q1,q2} ⊂ L^{q1*,q2*}`` whenever
``q1* ≤ q1`` and ``q2* ≤ q2``, so a drift in a loose class also lies in the
tighter class at the reduced exponents. The reduction lowers ``q`` on a
fixed grid and solves the scaling identity for the free exponent.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from pme_lab.classes.exponents import q_md, reciprocal, sobolev_lift
from pme_lab.classes.theorems import ClassQuery, ClassVerdict, theorem_admissible
from pme_lab.exceptions import EmbeddingError
from pme_lab.types import DriftStructure, TheoremId

__all__ = ["EmbeddingResult", "embed_pair", "lift_gradient_pair", "sobolev_lift", "SCAN_STEP"]

logger = logging.getLogger(__name__)

SCAN_STEP = 1e-3

_MODES: dict[DriftStructure, tuple[TheoremId, TheoremId]] = {
    DriftStructure.GENERAL: (TheoremId.WEAK_LQ, TheoremId.AC_LQ),
    DriftStructure.DIV_NONNEG: (TheoremId.DIVNONNEG_AC_EMBEDDED, TheoremId.DIVNONNEG_AC_LQ),
    DriftStructure.GRADIENT_CLASS: (TheoremId.GRADIENT_AC_EMBEDDED, TheoremId.GRADIENT_AC_LQ),
}

_ENTROPY_TARGETS = {
    TheoremId.AC_LQ: TheoremId.AC_ENTROPY,
    TheoremId.DIVNONNEG_AC_LQ: TheoremId.DIVNONNEG_AC_ENTROPY,
    TheoremId.GRADIENT_AC_LQ: TheoremId.GRADIENT_AC_ENTROPY,
}


@dataclass(frozen=True)
class EmbeddingResult:
    """Reduced exponents; for the gradient mode ``q1`` is ``q̃1`` and is never changed."""

    q1: float
    q2: float
    q_star: float
    source: TheoremId
    target: TheoremId
    verdict: ClassVerdict


def _solve_q2(m: float, q: float, d: int, q1: float, gradient: bool) -> float | None:
    """Free exponent on the scaling line through ``1/q1``; None when the line misses ``q2 > 0``."""
    Q = q_md(m, d, q)
    rhs = (2.0 + Q if gradient else 1.0 + Q) - d * reciprocal(q1)
    if rhs <= 0:
        return None
    return (2.0 + Q) / rhs


def _candidates(q: float) -> np.ndarray:
    steps = int(math.floor((q - 1.0) / SCAN_STEP + 1e-9))
    grid = q - SCAN_STEP * np.arange(steps + 1)
    grid = grid[grid > 1.0]
    return np.append(grid, 1.0)


def embed_pair(
    m: float,
    q: float,
    d: int,
    q1: float,
    q2: float,
    structure: DriftStructure = DriftStructure.GENERAL,
) -> EmbeddingResult:
    """Find ``(q1*, q2*, q*)`` meeting the tighter hypothesis of ``structure``.

    Modes:
        general: ``weak-lq`` to ``ac-lq``; ``q1`` is capped at ``2m/(m−1)``.
        div_nonneg: ``divnonneg-ac-embedded`` to ``divnonneg-ac-lq`` with ``q1`` fixed.
        gradient_class: ``gradient-ac-embedded`` to ``gradient-ac-lq`` with ``q̃1`` fixed.

    A pair that already meets the tighter hypothesis is returned unchanged
    with ``q* = q``.

    Raises:
        EmbeddingError: If the input misses the looser hypothesis or no
            reduction on the scan grid meets the tighter one.
    """
    structure = DriftStructure(structure)
    source, target = _MODES[structure]
    gradient = structure is DriftStructure.GRADIENT_CLASS

    loose = theorem_admissible(ClassQuery(m, q, d, q1, q2, source, structure))
    if not loose.admissible:
        raise EmbeddingError(
            f"({q1:g}, {q2:g}) at q={q:g} does not satisfy {source.value}: "
            f"{', '.join(loose.failed())}"
        )

    tight = theorem_admissible(ClassQuery(m, q, d, q1, q2, target, structure))
    if tight.admissible:
        return EmbeddingResult(q1, q2, q, source, target, tight)

    if structure is DriftStructure.GENERAL:
        q1_new = min(q1, 2.0 * m / (m - 1.0))
    else:
        q1_new = q1

    for q_new in _candidates(q):
        q2_new = _solve_q2(m, float(q_new), d, q1_new, gradient)
        if q2_new is None or q2_new > q2 * (1 + 1e-12):
            continue
        goal = _ENTROPY_TARGETS[target] if q_new == 1.0 else target
        verdict = theorem_admissible(ClassQuery(m, float(q_new), d, q1_new, q2_new, goal, structure))
        if verdict.admissible:
            logger.debug(
                f"Embedded ({q1:g}, {q2:g}, q={q:g}) into {goal.value} at "
                f"({q1_new:g}, {q2_new:.6g}, q*={q_new:.3f})"
            )
            return EmbeddingResult(q1_new, q2_new, float(q_new), source, goal, verdict)

    raise EmbeddingError(
        f"No q* in [1, {q:g}] moves ({q1:g}, {q2:g}) into {target.value}"
    )


def lift_gradient_pair(d: int, q1t: float, q2t: float) -> tuple[float, float]:
    """Field-class pair ``(dq̃1/(d−q̃1), q̃2)`` controlling ``V`` once ``∇V ∈ L^{q̃1,q̃2}``."""
    return sobolev_lift(d, q1t), q2t
