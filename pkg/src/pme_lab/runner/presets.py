"""Named drifts, initial data and ready-made run scenarios."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from pme_lab.drift.fields import (
    VectorFieldSpec,
    coefficient_field,
    constant_field,
    radial_field,
    rotation_field,
    shear_field,
    zero_field,
)
from pme_lab.exceptions import ConfigError, PmeLabError
from pme_lab.geometry.grid import Grid, TimePartition
from pme_lab.measures.density import DensityField
from pme_lab.pme.barenblatt import barenblatt
from pme_lab.types import Field, InitialPreset

if TYPE_CHECKING:
    from pme_lab.runner.loader import DriftSection, InitialSection, RunConfig

__all__ = [
    "AUDIT_CHECKS",
    "DRIFT_FLAGS",
    "DRIFT_PRESETS",
    "RUN_PRESETS",
    "SIGNAL_PRESETS",
    "Setup",
    "build_setup",
    "drift_from_section",
    "initial_density",
    "initial_signal",
    "preset_data",
]

DRIFT_PRESETS = ("zero", "constant", "rotation", "radial-in", "radial-out", "shear", "table")
DRIFT_FLAGS = ("tangent", "div-nonneg", "div-free")
SIGNAL_PRESETS = ("uniform", "bump")
AUDIT_CHECKS = (
    "energy",
    "energy-family",
    "entropy",
    "speed",
    "holder",
    "interpolation",
    "parabolic-embedding",
    "compactness",
)

RUN_PRESETS: dict[str, dict[str, Any]] = {
    "divfree-rotation": {
        "grid": {"lower": [0.0, 0.0], "upper": [1.0, 1.0], "cells": [24, 24]},
        "time": {"horizon": 0.02, "steps": 40, "subintervals": 4},
        "model": {"m": 2.0, "q": 2.0},
        "drift": {"preset": "rotation", "amplitude": 1.0},
        "initial": {"preset": "bump", "center": [0.35, 0.5], "width": 0.12, "floor": 0.05},
        "audit": {
            "checks": ["energy", "energy-family", "entropy", "speed", "holder", "parabolic-embedding"],
        },
    },
    "general-shear": {
        "grid": {"lower": [0.0], "upper": [1.0], "cells": [64]},
        "time": {"horizon": 0.04, "steps": 64, "subintervals": 4},
        "model": {"m": 2.0, "q": 2.0},
        "drift": {"preset": "shear", "amplitude": 1.0, "q1": math.inf, "q2": 2.0},
        "initial": {"preset": "bump", "center": [0.4], "width": 0.1, "floor": 0.05},
        "audit": {"checks": list(AUDIT_CHECKS), "refinement": True},
    },
    "pure-pme": {
        "grid": {"lower": [0.0], "upper": [1.0], "cells": [64]},
        "time": {"horizon": 0.01, "steps": 40, "subintervals": 4},
        "model": {"m": 2.0, "q": 2.0},
        "drift": {"preset": "zero"},
        "initial": {"preset": "barenblatt", "time": 0.001},
        "audit": {"checks": ["energy", "energy-family", "entropy", "speed", "holder"]},
    },
    "ks-box": {
        "grid": {"lower": [0.0, 0.0], "upper": [1.0, 1.0], "cells": [16, 16]},
        "time": {"horizon": 0.01, "steps": 20, "subintervals": 1},
        "model": {"m": 7.0 / 6.0, "d": 3, "chemotaxis": True},
        "initial": {
            "preset": "bump",
            "center": [0.4, 0.5],
            "width": 0.15,
            "floor": 0.1,
            "signal": "bump",
            "signal_level": 1.0,
        },
    },
}


def preset_data(name: str) -> dict[str, Any]:
    """Deep copy of a run preset as a raw config mapping."""
    if name not in RUN_PRESETS:
        known = ", ".join(sorted(RUN_PRESETS))
        raise ConfigError(f"Unknown preset '{name}' (expected one of: {known})")
    return copy.deepcopy(RUN_PRESETS[name])


def _box_center(grid: Grid) -> tuple[float, ...]:
    return tuple(0.5 * (a + b) for a, b in zip(grid.lower, grid.upper))


def drift_from_section(section: DriftSection, grid: Grid) -> VectorFieldSpec:
    """Instantiate the drift preset named by ``section.preset`` on ``grid``'s box.

    Flags declared for a coefficient table are verified on ``grid``.
    """
    d = grid.dimension
    if section.preset == "zero":
        return zero_field(d)
    if section.preset == "constant":
        if section.vector is None or len(section.vector) != d:
            raise ConfigError(f"Drift 'constant' needs a vector of length {d}")
        return constant_field(section.vector)
    if section.preset == "rotation":
        return rotation_field(grid.lower, grid.upper, section.amplitude)
    if section.preset in ("radial-in", "radial-out"):
        center = section.center if section.center is not None else _box_center(grid)
        if len(center) != d:
            raise ConfigError(f"Drift center must have length {d}, got {len(center)}")
        return radial_field(center, section.kappa, outward=section.preset == "radial-out")
    if section.preset == "shear":
        return shear_field(grid.lower, grid.upper, section.amplitude)
    if section.preset == "table":
        if section.coefficients is None:
            raise ConfigError("Drift 'table' needs a coefficient table")
        V = coefficient_field(
            grid.lower,
            grid.upper,
            section.coefficients,
            normal_flux_zero="tangent" in section.flags,
            divergence_nonneg="div-nonneg" in section.flags,
            divergence_free="div-free" in section.flags,
        )
        V.check_structure(grid)
        return V
    raise ConfigError(f"Unknown drift preset '{section.preset}'")


def _gaussian(grid: Grid, center: tuple[float, ...], width: float) -> Field:
    c = np.asarray(center, dtype=float)
    r2 = np.sum((grid.centers - c) ** 2, axis=-1)
    return np.exp(-r2 / (2.0 * width**2))


def _two_bump_centers(grid: Grid) -> tuple[tuple[float, ...], ...]:
    mid = _box_center(grid)
    a, b = grid.lower[0], grid.upper[0]
    first = (a + (b - a) / 3.0,) + mid[1:]
    second = (a + 2.0 * (b - a) / 3.0,) + mid[1:]
    return first, second


def initial_density(section: InitialSection, grid: Grid, m: float) -> DensityField:
    """Unit-mass initial density; ``floor`` is added before normalisation."""
    center = section.center if section.center is not None else _box_center(grid)
    if section.preset is InitialPreset.UNIFORM:
        return DensityField.uniform(grid)
    if section.preset is InitialPreset.BARENBLATT:
        rho = barenblatt(grid, m, section.time, center=tuple(center), scaling=section.scaling)
        if section.floor > 0:
            rho = rho.with_values(rho.values + section.floor).normalized()
        return rho
    if section.preset is InitialPreset.BUMP:
        values = _gaussian(grid, center, section.width)
    else:
        centers = section.centers if section.centers is not None else _two_bump_centers(grid)
        values = sum(_gaussian(grid, c, section.width) for c in centers)
    return DensityField(grid, values + section.floor).normalized()


def initial_signal(section: InitialSection, grid: Grid) -> Field:
    """Initial chemical concentration with maximum ``signal_level``."""
    if section.signal == "uniform":
        return grid.constant(section.signal_level)
    center = section.center if section.center is not None else _box_center(grid)
    return section.signal_level * _gaussian(grid, center, 2.0 * section.width)


@dataclass
class Setup:
    """Grid, time partition, initial density and drift of one run."""

    grid: Grid
    partition: TimePartition
    rho0: DensityField
    drift: VectorFieldSpec


def build_setup(config: RunConfig) -> Setup:
    """Instantiate everything a run needs from its config.

    Any failure here is a problem with the config, so library errors are
    re-raised as :class:`ConfigError`.
    """
    try:
        grid = Grid(config.grid.lower, config.grid.upper, config.grid.cells)
        partition = TimePartition(config.time.horizon, config.time.steps, config.time.subintervals)
        drift = drift_from_section(config.drift, grid)
        drift.check_boundary(grid)
        rho0 = initial_density(config.initial, grid, config.model.m)
        rho0.require_normalized(config.tolerances.mass)
    except ConfigError:
        raise
    except PmeLabError as e:
        raise ConfigError(str(e)) from e
    return Setup(grid=grid, partition=partition, rho0=rho0, drift=drift)
