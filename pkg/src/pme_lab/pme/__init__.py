"""Homogeneous porous medium equation: implicit solver, Barenblatt oracle, energy balance."""

from pme_lab.pme.audit import PmeEnergyResidual, energy_coefficient, pme_energy_audit
from pme_lab.pme.barenblatt import BarenblattProfile, barenblatt
from pme_lab.pme.solver import (
    NewtonReport,
    PmeStepConfig,
    pme_step,
    pme_trajectory,
    solve_implicit_diffusion,
)

__all__ = [
    "BarenblattProfile",
    "NewtonReport",
    "PmeEnergyResidual",
    "PmeStepConfig",
    "barenblatt",
    "energy_coefficient",
    "pme_energy_audit",
    "pme_step",
    "pme_trajectory",
    "solve_implicit_diffusion",
]
