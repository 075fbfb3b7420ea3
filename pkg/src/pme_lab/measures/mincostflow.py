"""Exact discrete transport as a min-cost flow linear program.

Supply nodes ``i`` carry mass ``a[i]``, demand nodes ``j`` carry ``b[j]``,
every arc ``i -> j`` is uncapacitated with cost ``cost[i, j]``. The plan is
the flow vector of the bipartite network, solved with HiGHS through
``scipy.optimize.linprog``.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sps
from scipy.optimize import linprog

from pme_lab.exceptions import NormalizationError, SolverError

__all__ = ["min_cost_transport"]

logger = logging.getLogger(__name__)

MASS_ATOL = 1e-9
FEASIBILITY_TOL = 1e-10


def _marginal_constraints(n: int, m: int) -> sps.csr_matrix:
    """Row sums then column sums of a flattened ``(n, m)`` plan."""
    rows = sps.kron(sps.identity(n), np.ones((1, m)))
    cols = sps.kron(np.ones((1, n)), sps.identity(m))
    return sps.vstack([rows, cols]).tocsr()


def min_cost_transport(
    a: np.ndarray,
    b: np.ndarray,
    cost: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Solve ``min <cost, P>`` over plans with marginals ``a`` and ``b``.

    Returns:
        The optimal value and the optimal plan of shape ``(len(a), len(b))``.

    Raises:
        NormalizationError: If the marginals are negative or carry different mass.
        SolverError: If the linear program does not reach an optimum.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cost = np.asarray(cost, dtype=float)
    n, m = len(a), len(b)
    if cost.shape != (n, m):
        raise ValueError(f"cost has shape {cost.shape}, expected {(n, m)}")
    if np.any(a < 0) or np.any(b < 0):
        raise NormalizationError("Transport marginals must be nonnegative")
    if abs(a.sum() - b.sum()) > MASS_ATOL * max(1.0, a.sum()):
        raise NormalizationError(
            f"Marginals carry different mass: {a.sum():.12g} vs {b.sum():.12g}"
        )

    demand = b * (a.sum() / b.sum()) if b.sum() > 0 else b
    result = linprog(
        cost.ravel(),
        A_eq=_marginal_constraints(n, m),
        b_eq=np.concatenate([a, demand]),
        bounds=(0.0, None),
        method="highs",
        options={"primal_feasibility_tolerance": FEASIBILITY_TOL},
    )
    if result.status != 0:
        raise SolverError(f"Transport LP failed: {result.message}")

    plan = np.maximum(result.x.reshape(n, m), 0.0)
    value = float(np.sum(plan * cost))
    logger.debug(f"Min-cost transport: {n}x{m} plan, {result.nit} iterations, value {value:.6e}")
    return value, plan
