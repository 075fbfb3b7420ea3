"""Time-indexed density sequences with per-step diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from pme_lab.exceptions import AuditError, GridError
from pme_lab.geometry.grid import Grid
from pme_lab.measures.density import DensityField

__all__ = ["TrajectoryRecord"]


@dataclass
class TrajectoryRecord:
    """Densities at increasing times on one grid.

    ``diagnostics[k]`` belongs to ``fields[k]``; the initial entry is usually
    empty.
    """

    grid: Grid
    fields: list[DensityField] = field(default_factory=list)
    diagnostics: list[dict[str, Any]] = field(default_factory=list)

    @classmethod
    def starting_at(cls, rho0: DensityField) -> TrajectoryRecord:
        record = cls(rho0.grid)
        record.append(rho0, {"mass": rho0.mass})
        return record

    def append(self, rho: DensityField, diagnostics: dict[str, Any] | None = None) -> None:
        if rho.grid != self.grid:
            raise GridError("All trajectory fields must share one grid")
        if self.fields and rho.time < self.fields[-1].time:
            raise GridError(
                f"Trajectory times must not decrease: {rho.time} after {self.fields[-1].time}"
            )
        self.fields.append(rho)
        self.diagnostics.append(dict(diagnostics or {}))

    def __len__(self) -> int:
        return len(self.fields)

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.fields])

    @property
    def initial(self) -> DensityField:
        if not self.fields:
            raise AuditError("Trajectory is empty")
        return self.fields[0]

    @property
    def final(self) -> DensityField:
        if not self.fields:
            raise AuditError("Trajectory is empty")
        return self.fields[-1]

    @property
    def steps(self) -> np.ndarray:
        """Time increments between consecutive fields."""
        return np.diff(self.times)

    def stack(self) -> np.ndarray:
        """Values as an array of shape ``(K, *grid.shape)``."""
        return np.stack([f.values for f in self.fields])

    def masses(self) -> np.ndarray:
        return np.array([f.mass for f in self.fields])

    def series(self, key: str) -> list[Any]:
        return [d.get(key) for d in self.diagnostics]
