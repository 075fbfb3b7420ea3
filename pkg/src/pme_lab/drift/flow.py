"""Characteristics of the drift, their Jacobians and semi-Lagrangian push-forward.

``ψ(t; s, x)`` solves ``dψ/dτ = V(ψ, τ)`` with ``ψ(s) = x``. The log-Jacobian
``∫ₛᵗ ∇·V(ψ(τ), τ) dτ`` is integrated alongside the position with the same
classical Runge-Kutta stages.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from pme_lab.drift.fields import VectorFieldSpec
from pme_lab.exceptions import ConfigError, FlowError
from pme_lab.geometry.grid import Grid
from pme_lab.measures.density import DensityField
from pme_lab.types import Field, Points

__all__ = [
    "FlowTrace",
    "PushforwardReport",
    "ContractionReport",
    "trace",
    "flow_map",
    "jacobian",
    "pushforward",
    "pushforward_with_report",
    "lipschitz_contraction_check",
    "CLAMP_CELLS",
]

logger = logging.getLogger(__name__)

CLAMP_CELLS = 10.0
ODE_LIP_FRACTION = 0.005
MAX_ODE_STEP = 0.05
CONTRACTION_SLACK = 1e-6
RENORM_WARN = 0.05


@dataclass(frozen=True)
class FlowTrace:
    """End points, log-Jacobians and the largest clamp applied on the way."""

    points: Points
    log_jacobian: Field
    clamp: float
    substeps: int


@dataclass(frozen=True)
class PushforwardReport:
    mass_drift: float
    clamp: float
    substeps: int


@dataclass(frozen=True)
class ContractionReport:
    """Distance ratios of sampled point pairs against ``e^{±L}``."""

    lipschitz_integral: float
    min_ratio: float
    max_ratio: float
    lower_bound: float
    upper_bound: float
    passed: bool


def _substeps(span: float, lip: float, max_step: float, dt: float | None = None) -> int:
    if span == 0:
        return 0
    step = max_step if dt is None else min(max_step, dt)
    if lip > 0:
        step = min(step, ODE_LIP_FRACTION / lip)
    return max(1, math.ceil(abs(span) / step))


def _resolve_lipschitz(V: VectorFieldSpec, grid: Grid | None) -> float:
    if V.lipschitz is not None:
        return V.lipschitz
    if grid is None:
        raise ConfigError(
            f"Drift '{V.name}' has no Lipschitz bound; pass a grid to sample one"
        )
    return V.lipschitz_estimate(grid)


def trace(
    V: VectorFieldSpec,
    s: float,
    t: float,
    x: Points,
    grid: Grid | None = None,
    clamp_to_box: bool = True,
    max_step: float = MAX_ODE_STEP,
    dt: float | None = None,
) -> FlowTrace:
    """Integrate characteristics from time ``s`` to time ``t`` (either order).

    With a grid and ``clamp_to_box``, every stage is clamped to the closed box
    and the largest clamp distance is recorded. Sub-steps never exceed
    ``max_step``, the diffusion step ``dt`` when given, or a small fraction of
    ``1/Lip(V)``.

    Raises:
        FlowError: If a clamp exceeds ten cell widths.
    """
    x = np.array(x, dtype=float, copy=True)
    if x.shape[-1] != V.dimension:
        raise ConfigError(f"Points have dimension {x.shape[-1]}, drift has {V.dimension}")
    if dt is not None and dt <= 0:
        raise ConfigError(f"ODE step cap must be positive, got {dt}")
    lip = _resolve_lipschitz(V, grid)
    n = _substeps(t - s, lip, max_step, dt)
    ell = np.zeros(x.shape[:-1])
    if n == 0:
        return FlowTrace(x, ell, 0.0, 0)

    k = (t - s) / n
    clamp = 0.0

    def project(p: Points) -> Points:
        nonlocal clamp
        if grid is None or not clamp_to_box:
            return p
        projected, dist = grid.clamp(p)
        if dist.size:
            clamp = max(clamp, float(np.max(dist)))
        return projected

    tau = s
    for _ in range(n):
        k1 = V(x, tau)
        d1 = V.div(x, tau)
        x2 = project(x + 0.5 * k * k1)
        k2 = V(x2, tau + 0.5 * k)
        d2 = V.div(x2, tau + 0.5 * k)
        x3 = project(x + 0.5 * k * k2)
        k3 = V(x3, tau + 0.5 * k)
        d3 = V.div(x3, tau + 0.5 * k)
        x4 = project(x + k * k3)
        k4 = V(x4, tau + k)
        d4 = V.div(x4, tau + k)
        x = project(x + (k / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
        ell = ell + (k / 6.0) * (d1 + 2 * d2 + 2 * d3 + d4)
        tau += k

    if grid is not None and clamp_to_box and clamp > CLAMP_CELLS * grid.max_spacing:
        raise FlowError(
            f"Characteristic of '{V.name}' left the box by {clamp:.3e} "
            f"(tolerance {CLAMP_CELLS * grid.max_spacing:.3e})",
            clamp=clamp,
        )
    return FlowTrace(x, ell, clamp, n)


def flow_map(
    V: VectorFieldSpec,
    s: float,
    t: float,
    x: Points,
    grid: Grid | None = None,
) -> Points:
    """``ψ(t; s, x)``."""
    return trace(V, s, t, x, grid).points


def jacobian(
    V: VectorFieldSpec,
    s: float,
    t: float,
    x: Points,
    grid: Grid | None = None,
) -> Field:
    """``J_{s,t}(x) = exp ∫ₛᵗ ∇·V(ψ(τ; s, x), τ) dτ``."""
    return np.exp(trace(V, s, t, x, grid).log_jacobian)


def _interpolator(rho: DensityField) -> RegularGridInterpolator:
    grid = rho.grid
    axes = tuple(
        np.concatenate(([a], centers, [b]))
        for a, b, centers in zip(grid.lower, grid.upper, grid.axes)
    )
    padded = np.pad(rho.values, 1, mode="edge")
    return RegularGridInterpolator(axes, padded, method="linear", bounds_error=False, fill_value=0.0)


def pushforward_with_report(
    rho: DensityField,
    V: VectorFieldSpec,
    s: float,
    t: float,
    dt: float | None = None,
) -> tuple[DensityField, PushforwardReport]:
    """Semi-Lagrangian push-forward of ``rho`` from time ``s`` to time ``t``.

    Every target centre ``y`` is traced back to its foot ``ψ(s; t, y)`` and
    receives ``ϱ(foot)·J_{t,s}(y)``. Feet are clamped to the box; the result
    is rescaled to the input mass and the relative correction is reported.

    Raises:
        FlowError: If a foot lands more than ten cells outside the box, or if
            the push-forward of a positive mass comes out empty.
    """
    grid = rho.grid
    if grid.dimension != V.dimension:
        raise ConfigError(f"Drift '{V.name}' is {V.dimension}D, density is {grid.dimension}D")
    if t == s:
        return rho, PushforwardReport(0.0, 0.0, 0)

    unclamped = trace(V, t, s, grid.centers, grid, clamp_to_box=False, dt=dt)
    feet, dist = grid.clamp(unclamped.points)
    clamp = float(np.max(dist)) if dist.size else 0.0
    tolerance = CLAMP_CELLS * grid.max_spacing
    if clamp > tolerance:
        escaped = int(np.count_nonzero(dist > tolerance))
        raise FlowError(
            f"Back-traced foot under '{V.name}' left the box by {clamp:.3e} "
            f"(tolerance {tolerance:.3e}, {escaped} cells)",
            clamp=clamp,
        )

    values = _interpolator(rho)(feet) * np.exp(unclamped.log_jacobian)
    mass_in = rho.mass
    mass_raw = float(np.sum(values) * grid.cell_volume)
    if mass_in > 0 and not mass_raw > 0:
        raise FlowError(
            f"Push-forward under '{V.name}' from t={s:g} to t={t:g} lost all of mass {mass_in:.3e}",
            clamp=clamp,
        )
    drift = mass_raw / mass_in - 1.0 if mass_in > 0 else 0.0
    if mass_raw > 0 and mass_raw != mass_in:
        values = values * (mass_in / mass_raw)
    if abs(drift) > RENORM_WARN:
        logger.warning(f"Push-forward under '{V.name}' renormalised mass by {drift:+.3e}")
    else:
        logger.debug(f"Push-forward under '{V.name}': mass drift {drift:+.3e}, clamp {clamp:.2e}")

    report = PushforwardReport(
        mass_drift=drift,
        clamp=clamp,
        substeps=unclamped.substeps,
    )
    return rho.with_values(values, t), report


def pushforward(
    rho: DensityField,
    V: VectorFieldSpec,
    s: float,
    t: float,
    dt: float | None = None,
) -> DensityField:
    """Push ``rho`` forward along the flow of ``V`` from ``s`` to ``t``."""
    return pushforward_with_report(rho, V, s, t, dt)[0]


def lipschitz_contraction_check(
    V: VectorFieldSpec,
    s: float,
    t: float,
    pairs: np.ndarray,
    grid: Grid | None = None,
    slack: float = CONTRACTION_SLACK,
) -> ContractionReport:
    """Check ``e^{−L}|x−y| ≤ |ψ(x)−ψ(y)| ≤ e^{L}|x−y|`` with ``L = ∫ Lip(V)``.

    Args:
        V: Drift.
        s: Start time.
        t: End time.
        pairs: Array of shape ``(k, 2, d)``.
        grid: Box used for clamping and, when ``V`` has no bound, for sampling one.
        slack: Relative slack on both bounds.
    """
    pairs = np.asarray(pairs, dtype=float)
    lip = _resolve_lipschitz(V, grid)
    big_l = lip * abs(t - s)
    x = flow_map(V, s, t, pairs[:, 0], grid)
    y = flow_map(V, s, t, pairs[:, 1], grid)
    before = np.linalg.norm(pairs[:, 0] - pairs[:, 1], axis=-1)
    after = np.linalg.norm(x - y, axis=-1)
    keep = before > 0
    ratios = after[keep] / before[keep]
    lower, upper = math.exp(-big_l), math.exp(big_l)
    lo = float(np.min(ratios)) if ratios.size else 1.0
    hi = float(np.max(ratios)) if ratios.size else 1.0
    passed = lo >= lower * (1 - slack) and hi <= upper * (1 + slack)
    return ContractionReport(big_l, lo, hi, lower, upper, passed)
