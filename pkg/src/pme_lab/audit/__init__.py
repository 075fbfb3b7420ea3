"""Numerical audits of the a priori estimates along computed trajectories."""

from pme_lab.audit.energy import audit_energy, audit_energy_family, audit_entropy
from pme_lab.audit.holder import audit_wasserstein_holder
from pme_lab.audit.interpolation import (
    audit_compactness,
    audit_interpolation,
    audit_parabolic_embedding,
    check_window,
)
from pme_lab.audit.report import AuditEntry, EstimateReport, RefinementCheck, compare_refinement
from pme_lab.audit.speed import audit_speed, speed_identity_residual

__all__ = [
    "AuditEntry",
    "EstimateReport",
    "RefinementCheck",
    "audit_compactness",
    "audit_energy",
    "audit_energy_family",
    "audit_entropy",
    "audit_interpolation",
    "audit_parabolic_embedding",
    "audit_speed",
    "audit_wasserstein_holder",
    "check_window",
    "compare_refinement",
    "speed_identity_residual",
]
