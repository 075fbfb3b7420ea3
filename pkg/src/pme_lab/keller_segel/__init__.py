"""Consumption-type Keller-Segel model and its exponent arithmetic."""

from pme_lab.keller_segel.exponents import KsAdmissibility, ks_admissible_q
from pme_lab.keller_segel.model import (
    KsSeries,
    KsState,
    ks_dissipation,
    ks_lyapunov,
    ks_step,
    ks_trajectory,
)

__all__ = [
    "KsAdmissibility",
    "KsSeries",
    "KsState",
    "ks_admissible_q",
    "ks_dissipation",
    "ks_lyapunov",
    "ks_step",
    "ks_trajectory",
]
