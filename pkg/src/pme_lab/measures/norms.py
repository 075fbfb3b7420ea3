"""Lebesgue norms, entropy and Hölder seminorms of densities."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import xlogy

from pme_lab.exceptions import InvalidExponentError
from pme_lab.geometry.grid import integrate
from pme_lab.measures.density import DensityField

__all__ = [
    "lq_norm",
    "power_integral",
    "entropy",
    "abs_entropy",
    "holder_seminorm",
]

EXHAUSTIVE_AXIS_LIMIT = 256
SAMPLED_PAIRS = 100_000
_CHUNK_ENTRIES = 1 << 22


def lq_norm(rho: DensityField, q: float) -> float:
    """``(∫ρ^q)^{1/q}``, or the maximum when ``q`` is infinite.

    Raises:
        InvalidExponentError: If ``q < 1``.
    """
    if not q >= 1:
        raise InvalidExponentError(f"lq_norm needs q >= 1, got {q}")
    if math.isinf(q):
        return float(np.max(rho.values))
    return power_integral(rho, q) ** (1.0 / q)


def power_integral(rho: DensityField, r: float) -> float:
    """``∫ρ^r`` for any positive ``r``."""
    if not r > 0:
        raise InvalidExponentError(f"power must be positive, got {r}")
    return integrate(rho.grid, rho.values**r)


def entropy(rho: DensityField) -> float:
    """``∫ρ log ρ`` with ``0 log 0 = 0``."""
    return integrate(rho.grid, xlogy(rho.values, rho.values))


def abs_entropy(rho: DensityField) -> float:
    """``∫ρ|log ρ|``."""
    return integrate(rho.grid, np.abs(xlogy(rho.values, rho.values)))


def holder_seminorm(
    rho: DensityField,
    alpha: float,
    seed: int = 0,
    pairs: int = SAMPLED_PAIRS,
) -> float:
    """Largest ``|ρ(x)−ρ(y)|/|x−y|^α`` over cell-centre pairs.

    All pairs are visited when every axis has at most 256 cells; finer grids
    use a seeded random sample of ``pairs`` pairs.
    """
    if not 0 < alpha <= 1:
        raise InvalidExponentError(f"Hölder exponent must lie in (0, 1], got {alpha}")

    points = rho.grid.flat_centers()
    values = rho.values.reshape(-1)
    n = len(values)

    if max(rho.grid.cells) <= EXHAUSTIVE_AXIS_LIMIT:
        best = 0.0
        rows = max(1, _CHUNK_ENTRIES // n)
        for start in range(0, n, rows):
            stop = min(n, start + rows)
            dist = np.linalg.norm(points[start:stop, None, :] - points[None, :, :], axis=-1)
            diff = np.abs(values[start:stop, None] - values[None, :])
            mask = dist > 0
            if np.any(mask):
                best = max(best, float(np.max(diff[mask] / dist[mask] ** alpha)))
        return best

    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=pairs)
    j = rng.integers(0, n, size=pairs)
    keep = i != j
    dist = np.linalg.norm(points[i[keep]] - points[j[keep]], axis=-1)
    diff = np.abs(values[i[keep]] - values[j[keep]])
    return float(np.max(diff / dist**alpha)) if dist.size else 0.0
