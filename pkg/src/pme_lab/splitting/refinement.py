"""Refinement study of the splitting scheme in the number of sub-intervals."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from pme_lab.drift.fields import VectorFieldSpec
from pme_lab.exceptions import ConfigError
from pme_lab.geometry.grid import TimePartition
from pme_lab.measures.density import DensityField
from pme_lab.measures.transport import wasserstein
from pme_lab.splitting.monolithic import monolithic_solve
from pme_lab.splitting.scheme import split_solve

__all__ = [
    "RefinementReport",
    "fit_rate",
    "splitting_refinement_study",
    "RATE_THRESHOLD",
    "MONOTONE_SLACK",
]

logger = logging.getLogger(__name__)

RATE_THRESHOLD = 0.8
MONOTONE_SLACK = 0.10
DISTANCE_FLOOR = 1e-12


def fit_rate(n_values: Sequence[int], distances: Sequence[float]) -> float:
    """Least-squares slope of ``−log(distance)`` against ``log n``.

    Distances at or below the round-off floor are dropped. When fewer than
    two remain and every distance is negligible the rate is infinite; with
    fewer than two usable points otherwise it is NaN.
    """
    n = np.asarray(n_values, dtype=float)
    e = np.asarray(distances, dtype=float)
    keep = e > DISTANCE_FLOOR
    if np.count_nonzero(keep) < 2:
        return math.inf if not np.any(keep) else math.nan
    slope, _ = np.polyfit(np.log(n[keep]), np.log(e[keep]), 1)
    return float(-slope)


def _monotone(values: Sequence[float], slack: float) -> bool:
    return all(b <= a * (1 + slack) + DISTANCE_FLOOR for a, b in zip(values, values[1:]))


@dataclass
class RefinementReport:
    """Distances at the final time for each sub-interval count.

    ``to_reference[k]`` is ``W₂(ρₙ(T), ρ_mono(T))`` for ``n = n_values[k]``;
    ``successive[k]`` compares ``n_values[k]`` with ``n_values[k + 1]``.
    """

    n_values: list[int]
    to_reference: list[float] = field(default_factory=list)
    successive: list[float] = field(default_factory=list)
    reference_rate: float = math.nan
    successive_rate: float = math.nan
    max_mass_drift: list[float] = field(default_factory=list)

    @property
    def rate(self) -> float:
        """Rate used for acceptance.

        The n-vs-next comparison is preferred: the monolithic reference carries
        its own O(dt + h) error, so distances to it level off under refinement.
        """
        if not math.isnan(self.successive_rate):
            return self.successive_rate
        return self.reference_rate

    @property
    def monotone(self) -> bool:
        series = self.successive if len(self.successive) >= 2 else self.to_reference
        return _monotone(series, MONOTONE_SLACK)

    @property
    def passed(self) -> bool:
        return self.rate >= RATE_THRESHOLD and self.monotone

    def rows(self) -> list[dict[str, float | int | None]]:
        """One row per ``n`` for CSV output."""
        out = []
        for k, n in enumerate(self.n_values):
            out.append(
                {
                    "n": n,
                    "w2_to_reference": self.to_reference[k] if self.to_reference else None,
                    "w2_to_next": self.successive[k] if k < len(self.successive) else None,
                    "max_mass_drift": self.max_mass_drift[k],
                }
            )
        return out


def splitting_refinement_study(
    rho0: DensityField,
    V: VectorFieldSpec,
    m: float,
    partition: TimePartition,
    n_values: Sequence[int],
    reference: bool = True,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> RefinementReport:
    """Run the splitting scheme for every ``n`` and measure its convergence.

    Every run shares the time grid of ``partition``; each ``n`` must divide
    its step count. The reference is the monolithic solver on the same grid.

    Raises:
        ConfigError: If ``n_values`` is not strictly increasing.
        GridError: If some ``n`` does not divide the step count.
    """
    n_values = [int(n) for n in n_values]
    if len(n_values) < 2 or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ConfigError(f"n_values must be strictly increasing with two or more entries, got {n_values}")
    partitions = [partition.with_subintervals(n) for n in n_values]

    finals = []
    report = RefinementReport(n_values=n_values)
    for n, part in zip(n_values, partitions):
        run = split_solve(rho0, V, m, part, measure_gaps=False, tol=tol, max_iter=max_iter)
        finals.append(run.final)
        report.max_mass_drift.append(max((abs(d) for d in run.mass_drift), default=0.0))
        logger.info(f"Split run n={n} done")

    if reference:
        mono = monolithic_solve(rho0, V, m, partition, tol=tol, max_iter=max_iter).final
        report.to_reference = [wasserstein(f, mono, 2.0).distance for f in finals]
        report.reference_rate = fit_rate(n_values, report.to_reference)

    report.successive = [wasserstein(a, b, 2.0).distance for a, b in zip(finals, finals[1:])]
    report.successive_rate = fit_rate(n_values[:-1], report.successive)

    logger.info(
        f"Refinement study over n={n_values}: rate {report.rate:.3f}, "
        f"monotone {report.monotone}"
    )
    return report
