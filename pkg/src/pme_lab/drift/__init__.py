"""Drift fields, their flow maps and density push-forward."""

from pme_lab.drift.fields import (
    CoefficientTerm,
    VectorFieldSpec,
    coefficient_field,
    constant_field,
    radial_field,
    rotation_field,
    shear_field,
    zero_field,
)
from pme_lab.drift.flow import (
    ContractionReport,
    FlowTrace,
    PushforwardReport,
    flow_map,
    jacobian,
    lipschitz_contraction_check,
    pushforward,
    pushforward_with_report,
    trace,
)

__all__ = [
    "CoefficientTerm",
    "ContractionReport",
    "FlowTrace",
    "PushforwardReport",
    "VectorFieldSpec",
    "coefficient_field",
    "constant_field",
    "flow_map",
    "jacobian",
    "lipschitz_contraction_check",
    "pushforward",
    "pushforward_with_report",
    "radial_field",
    "rotation_field",
    "shear_field",
    "trace",
    "zero_field",
]
