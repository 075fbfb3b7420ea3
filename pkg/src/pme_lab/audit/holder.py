"""Hölder continuity in time of the solution curve in ``W_λ``."""

from __future__ import annotations

import logging
import math

import numpy as np

from pme_lab.audit.report import AuditEntry
from pme_lab.audit.sampling import require_fields
from pme_lab.measures.transport import wasserstein
from pme_lab.trajectory import TrajectoryRecord

__all__ = ["audit_wasserstein_holder", "select_frames", "MIN_FIELDS", "MAX_FRAMES", "EXPONENT_SLACK"]

logger = logging.getLogger(__name__)

MIN_FIELDS = 8
MAX_FRAMES = 12
EXPONENT_SLACK = 0.15
MIN_GAP_STEPS = 4
ZERO_DISTANCE = 1e-14


def select_frames(count: int, limit: int | None = MAX_FRAMES) -> np.ndarray:
    """Evenly spread indices into ``count`` fields, first and last included.

    ``limit=None`` keeps every field.
    """
    if limit is None or count <= limit:
        return np.arange(count)
    return np.unique(np.round(np.linspace(0, count - 1, limit)).astype(int))


def audit_wasserstein_holder(
    trajectory: TrajectoryRecord,
    lam: float,
    max_frames: int | None = MAX_FRAMES,
    epsilon: float | None = None,
) -> AuditEntry:
    """Fit ``log W_λ(ρ(t), ρ(s))`` against ``log(t−s)`` over recorded pairs.

    Distances are taken between every pair of at most ``max_frames`` evenly
    spread fields (all fields when ``None``); the metadata records the
    recorded count and whether frames were dropped. Only pairs at least four
    steps apart enter the fit. The fitted exponent must reach
    ``(λ−1)/λ − 0.15``. A trajectory that does not move passes with the
    exponent reported as ``"undefined"``.

    Raises:
        AuditError: If fewer than eight fields are recorded.
        TransportError: If an entropic distance fails to converge.
    """
    require_fields(trajectory, MIN_FIELDS)
    target = (lam - 1.0) / lam
    steps = trajectory.steps
    dt = float(np.min(steps[steps > 0])) if np.any(steps > 0) else 0.0
    frames = select_frames(len(trajectory), max_frames)
    times = trajectory.times

    gaps: list[float] = []
    distances: list[float] = []
    for a, i in enumerate(frames):
        for j in frames[a + 1:]:
            gap = float(times[j] - times[i])
            if gap < MIN_GAP_STEPS * dt * (1 - 1e-9):
                continue
            result = wasserstein(trajectory.fields[i], trajectory.fields[j], p=lam, epsilon=epsilon)
            gaps.append(gap)
            distances.append(result.distance)

    gaps_arr = np.array(gaps)
    dist_arr = np.array(distances)
    moving = dist_arr > ZERO_DISTANCE

    metadata: dict[str, object] = {
        "lambda": lam,
        "target_exponent": target,
        "pairs": len(gaps),
        "frames": [int(k) for k in frames],
        "recorded_fields": len(trajectory),
        "subsampled": len(frames) < len(trajectory),
    }

    if not np.any(moving):
        metadata["exponent"] = "undefined"
        return AuditEntry(
            name="wasserstein_holder",
            lhs=0.0,
            rhs_terms={"target_exponent": target},
            constant=0.0,
            passed=True,
            slack=0.0,
            metadata=metadata,
        )

    if len(np.unique(gaps_arr[moving])) < 2:
        metadata["exponent"] = "undefined"
        constant = float(np.max(dist_arr / gaps_arr**target))
        return AuditEntry(
            name="wasserstein_holder",
            lhs=float(dist_arr.max()),
            rhs_terms={"target_exponent": target},
            constant=constant,
            passed=math.isfinite(constant),
            slack=0.0,
            metadata=metadata,
        )

    slope, intercept = np.polyfit(np.log(gaps_arr[moving]), np.log(dist_arr[moving]), 1)
    constant = float(np.max(dist_arr / gaps_arr**target))
    metadata["exponent"] = float(slope)
    metadata["fit_intercept"] = float(intercept)
    logger.debug(f"W_{lam:g} Hölder fit over {int(moving.sum())} pairs: exponent {slope:.3f}")
    return AuditEntry(
        name="wasserstein_holder",
        lhs=float(slope),
        rhs_terms={"target_exponent": target},
        constant=constant,
        passed=bool(slope >= target - EXPONENT_SLACK),
        slack=float(slope - (target - EXPONENT_SLACK)),
        metadata=metadata,
    )
