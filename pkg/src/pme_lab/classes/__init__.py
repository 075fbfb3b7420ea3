"""Scaling classes for drifts: thresholds, hypothesis tables and region diagrams."""

from pme_lab.classes.embedding import EmbeddingResult, embed_pair, lift_gradient_pair
from pme_lab.classes.exponents import (
    Thresholds,
    gradient_scaling_residual,
    lambda_q,
    m_star,
    q2_lower,
    q2_upper,
    q_md,
    q_star,
    scaling_residual,
    sobolev_lift,
    thresholds,
    tilde_q2_range,
)
from pme_lab.classes.regions import (
    FigureRegion,
    LineMembership,
    point_cloud,
    polygon_contains,
    region_vertices,
)
from pme_lab.classes.theorems import ClassQuery, ClassVerdict, Constraint, theorem_admissible

__all__ = [
    "ClassQuery",
    "ClassVerdict",
    "Constraint",
    "EmbeddingResult",
    "FigureRegion",
    "LineMembership",
    "Thresholds",
    "embed_pair",
    "gradient_scaling_residual",
    "lambda_q",
    "lift_gradient_pair",
    "m_star",
    "point_cloud",
    "polygon_contains",
    "q2_lower",
    "q2_upper",
    "q_md",
    "q_star",
    "region_vertices",
    "scaling_residual",
    "sobolev_lift",
    "theorem_admissible",
    "thresholds",
    "tilde_q2_range",
]
