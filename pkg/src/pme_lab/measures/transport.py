"""Wasserstein distances between densities.

Three routes are available:

- ``wasserstein_1d``: quantile coupling of the piecewise-constant densities,
  integrated on a midpoint ``u``-grid.
- ``wasserstein_entropic``: debiased log-domain Sinkhorn (POT) with a
  warm-started ``ε`` schedule ``[4ε, 2ε, ε]``.
- ``exact_lp_transport``: the exact discrete optimum for small atom sets.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import ot

from pme_lab.exceptions import (
    AtomLimitError,
    GridError,
    InvalidExponentError,
    NormalizationError,
    TransportError,
)
from pme_lab.measures.density import DensityField
from pme_lab.measures.mincostflow import min_cost_transport
from pme_lab.types import TransportMethod

__all__ = [
    "DiscreteMeasure",
    "TransportPlanResult",
    "wasserstein",
    "wasserstein_1d",
    "wasserstein_1d_atoms",
    "wasserstein_entropic",
    "exact_lp_transport",
    "MAX_EXACT_ATOMS",
]

logger = logging.getLogger(__name__)

MAX_EXACT_ATOMS = 64
EPSILON_SCHEDULE = (4.0, 2.0, 1.0)


@dataclass(frozen=True)
class TransportPlanResult:
    """Outcome of a Wasserstein computation."""

    distance: float
    p: float
    method: TransportMethod
    iterations: int = 0
    marginal_error: float = 0.0
    epsilon: float | None = None


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted atoms in ``R^d``; ``points`` has shape ``(k, d)``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if points.shape[0] == 1 and np.ndim(self.points) == 1:
            points = points.T
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if points.shape[0] != weights.shape[0]:
            raise ValueError(
                f"{points.shape[0]} atoms but {weights.shape[0]} weights"
            )
        if np.any(weights < 0):
            raise NormalizationError("Atom weights must be nonnegative")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_density(cls, rho: DensityField) -> DiscreteMeasure:
        """Cell centres carrying positive mass, weighted by ``ρ|cell|``."""
        weights = rho.values.reshape(-1) * rho.grid.cell_volume
        keep = weights > 0
        return cls(rho.grid.flat_centers()[keep], weights[keep])

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())


def _check_p(p: float) -> None:
    if not (p >= 1 and math.isfinite(p)):
        raise InvalidExponentError(f"Transport exponent must be finite and >= 1, got {p}")


def _cost_matrix(x: np.ndarray, y: np.ndarray, p: float) -> np.ndarray:
    diff = x[:, None, :] - y[None, :, :]
    return np.linalg.norm(diff, axis=-1) ** p


def _quantiles_piecewise_constant(rho: DensityField, u: np.ndarray) -> np.ndarray:
    edges = rho.grid.edges[0]
    h = rho.grid.spacing[0]
    cell_mass = rho.values * h
    cell_mass = cell_mass / cell_mass.sum()
    cdf = np.concatenate(([0.0], np.cumsum(cell_mass)))
    cdf[-1] = 1.0
    k = np.searchsorted(cdf[1:], u, side="left")
    k = np.minimum(k, len(cell_mass) - 1)
    return edges[k] + (u - cdf[k]) / cell_mass[k] * h


def wasserstein_1d(mu: DensityField, nu: DensityField, p: float = 2.0) -> TransportPlanResult:
    """Quantile-coupling ``W_p`` of two probability densities on an interval.

    Each density is constant on its cells, so its quantile function is
    piecewise linear; ``∫₀¹|F⁻¹−G⁻¹|^p du`` is taken on ``max(10N, 1000)``
    midpoints.

    Raises:
        GridError: If the densities are not one-dimensional.
        NormalizationError: If either mass is off by more than 1e-6.
    """
    _check_p(p)
    for rho in (mu, nu):
        if rho.grid.dimension != 1:
            raise GridError("wasserstein_1d needs one-dimensional densities")
        rho.require_normalized()

    n_u = max(10 * max(mu.grid.cells[0], nu.grid.cells[0]), 1000)
    u = (np.arange(n_u) + 0.5) / n_u
    gap = np.abs(_quantiles_piecewise_constant(mu, u) - _quantiles_piecewise_constant(nu, u))
    distance = float(np.mean(gap**p) ** (1.0 / p))
    return TransportPlanResult(distance, p, TransportMethod.QUANTILE_1D)


def wasserstein_1d_atoms(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> float:
    """Exact ``W_p`` between atomic measures on the line, from the sorted 1D solver."""
    _check_p(p)
    if mu.points.shape[1] != 1 or nu.points.shape[1] != 1:
        raise GridError("wasserstein_1d_atoms needs points on a line")
    cost = ot.emd2_1d(
        mu.points[:, 0],
        nu.points[:, 0],
        mu.weights / mu.mass,
        nu.weights / nu.mass,
        metric="minkowski",
        p=p,
    )
    return max(float(cost), 0.0) ** (1.0 / p)


def _sinkhorn_potentials(
    a: np.ndarray,
    b: np.ndarray,
    cost: np.ndarray,
    epsilon: float,
    tol: float,
    max_iter: int,
    warm: tuple[np.ndarray, np.ndarray] | None,
) -> tuple[np.ndarray, np.ndarray, int, float]:
    """Log-domain Sinkhorn potentials ``(f, g)`` with plan ``a⊗b·e^{(f⊕g−C)/ε}``."""
    log_a, log_b = np.log(a), np.log(b)
    warmstart = None
    if warm is not None:
        warmstart = (log_a + warm[0] / epsilon, log_b + warm[1] / epsilon)
    _, log = ot.sinkhorn(
        a,
        b,
        cost,
        epsilon,
        method="sinkhorn_log",
        numItermax=max_iter,
        stopThr=tol,
        log=True,
        warn=False,
        warmstart=warmstart,
    )
    err = float(log["err"][-1]) if log["err"] else math.inf
    iterations = int(log.get("niter", max_iter - 1)) + 1
    if not err < tol:
        raise TransportError(
            f"Sinkhorn did not reach marginal error {tol:.1e} within {max_iter} iterations "
            f"(ε={epsilon:.3e}, last error {err:.3e})",
            marginal_error=err,
            iterations=iterations,
        )
    f = epsilon * (np.asarray(log["log_u"]) - log_a)
    g = epsilon * (np.asarray(log["log_v"]) - log_b)
    return f, g, iterations, err


def _entropic_cost(
    x: np.ndarray,
    a: np.ndarray,
    y: np.ndarray,
    b: np.ndarray,
    p: float,
    epsilon: float,
    tol: float,
    max_iter: int,
) -> tuple[float, int, float]:
    cost = _cost_matrix(x, y, p)
    warm = None
    total = 0
    err = 0.0
    for factor in EPSILON_SCHEDULE:
        f, g, iters, err = _sinkhorn_potentials(a, b, cost, factor * epsilon, tol, max_iter, warm)
        warm = (f, g)
        total += iters
    return float(a @ f + b @ g), total, err


def wasserstein_entropic(
    mu: DensityField,
    nu: DensityField,
    p: float = 2.0,
    epsilon: float | None = None,
    tol: float = 1e-9,
    max_iter: int = 20_000,
) -> TransportPlanResult:
    """Debiased entropic ``W_p``.

    The value is ``max(S, 0)^{1/p}`` with
    ``S = OT_ε(μ,ν) − ½OT_ε(μ,μ) − ½OT_ε(ν,ν)``; ``ε`` defaults to the squared
    largest cell width.

    Raises:
        TransportError: If Sinkhorn does not meet ``tol`` on the marginals.
    """
    _check_p(p)
    mu.require_normalized()
    nu.require_normalized()
    if epsilon is None:
        epsilon = max(mu.grid.max_spacing, nu.grid.max_spacing) ** 2
    if not epsilon > 0:
        raise InvalidExponentError(f"epsilon must be positive, got {epsilon}")

    am = DiscreteMeasure.from_density(mu)
    bm = DiscreteMeasure.from_density(nu)
    a = am.weights / am.mass
    b = bm.weights / bm.mass

    cross, it_ab, err = _entropic_cost(am.points, a, bm.points, b, p, epsilon, tol, max_iter)
    self_a, it_aa, _ = _entropic_cost(am.points, a, am.points, a, p, epsilon, tol, max_iter)
    self_b, it_bb, _ = _entropic_cost(bm.points, b, bm.points, b, p, epsilon, tol, max_iter)
    divergence = cross - 0.5 * (self_a + self_b)
    distance = max(divergence, 0.0) ** (1.0 / p)
    logger.debug(
        f"Entropic W_{p:g}: {distance:.6e} (ε={epsilon:.3e}, "
        f"{it_ab + it_aa + it_bb} iterations, marginal error {err:.2e})"
    )
    return TransportPlanResult(
        distance,
        p,
        TransportMethod.ENTROPIC,
        iterations=it_ab + it_aa + it_bb,
        marginal_error=err,
        epsilon=epsilon,
    )


def exact_lp_transport(
    mu: DiscreteMeasure | DensityField,
    nu: DiscreteMeasure | DensityField,
    p: float = 2.0,
) -> float:
    """Exact ``W_p`` between two small atomic measures.

    Raises:
        AtomLimitError: If either side has more than 64 atoms.
    """
    _check_p(p)
    if isinstance(mu, DensityField):
        mu = DiscreteMeasure.from_density(mu)
    if isinstance(nu, DensityField):
        nu = DiscreteMeasure.from_density(nu)
    if mu.size > MAX_EXACT_ATOMS or nu.size > MAX_EXACT_ATOMS:
        raise AtomLimitError(
            f"Exact transport accepts at most {MAX_EXACT_ATOMS} atoms per side, "
            f"got {mu.size} and {nu.size}"
        )
    a = mu.weights / mu.mass
    b = nu.weights / nu.mass
    value, _ = min_cost_transport(a, b, _cost_matrix(mu.points, nu.points, p))
    return max(value, 0.0) ** (1.0 / p)


def wasserstein(
    mu: DensityField,
    nu: DensityField,
    p: float = 2.0,
    epsilon: float | None = None,
) -> TransportPlanResult:
    """Quantile route in one dimension, entropic route otherwise."""
    if mu.grid.dimension == 1:
        return wasserstein_1d(mu, nu, p)
    return wasserstein_entropic(mu, nu, p, epsilon=epsilon)
