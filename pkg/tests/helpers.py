"""Shared test helpers for pme-lab tests."""

import argparse
from typing import Any

import numpy as np

from pme_lab.geometry.grid import Grid
from pme_lab.measures.density import DensityField
from pme_lab.runner.loader import RunConfig, parse_run_config
from pme_lab.trajectory import TrajectoryRecord


def make_grid(*cells: int, lower: tuple[float, ...] | None = None, upper: tuple[float, ...] | None = None) -> Grid:
    """Grid on the unit box unless bounds are given."""
    cells = cells or (32,)
    d = len(cells)
    return Grid(lower or (0.0,) * d, upper or (1.0,) * d, cells)


def make_bump(
    grid: Grid,
    center: tuple[float, ...] | None = None,
    width: float = 0.1,
    floor: float = 0.0,
    time: float = 0.0,
) -> DensityField:
    """Unit-mass Gaussian bump plus a constant floor."""
    if center is None:
        center = tuple(0.5 * (a + b) for a, b in zip(grid.lower, grid.upper))
    r2 = np.sum((grid.centers - np.asarray(center)) ** 2, axis=-1)
    values = np.exp(-r2 / (2.0 * width**2)) + floor
    return DensityField(grid, values, time).normalized()


def make_trajectory(fields: list[np.ndarray], grid: Grid, dt: float = 0.01) -> TrajectoryRecord:
    """Trajectory of the given value arrays at times 0, dt, 2dt, ..."""
    record = TrajectoryRecord(grid)
    for k, values in enumerate(fields):
        rho = DensityField(grid, values, k * dt)
        record.append(rho, {"mass": rho.mass})
    return record


def make_run_config(**sections: dict[str, Any]) -> RunConfig:
    """RunConfig from raw section mappings, defaults elsewhere."""
    return parse_run_config(dict(sections))


def make_cli_args(**kwargs: Any) -> argparse.Namespace:
    """argparse.Namespace with every CLI option unset."""
    defaults = {
        "config": None,
        "out": None,
        "m": None,
        "q": None,
        "d": None,
        "preset": None,
        "cells": None,
        "horizon": None,
        "steps": None,
        "subintervals": None,
        "n_values": None,
        "drift": None,
        "amplitude": None,
        "initial": None,
        "fields": None,
        "solver": None,
        "checks": None,
        "r1": None,
        "refinement": None,
        "figure": None,
        "resolution": None,
        "chemotaxis": None,
    }
    defaults.update(kwargs)
    return argparse.Namespace(**defaults)
