"""Densities as probability measures: norms, entropy and transport distances."""

from pme_lab.measures.density import DensityField
from pme_lab.measures.norms import (
    abs_entropy,
    entropy,
    holder_seminorm,
    lq_norm,
    power_integral,
)
from pme_lab.measures.transport import (
    DiscreteMeasure,
    TransportPlanResult,
    exact_lp_transport,
    wasserstein,
    wasserstein_1d,
    wasserstein_1d_atoms,
    wasserstein_entropic,
)

__all__ = [
    "DensityField",
    "DiscreteMeasure",
    "TransportPlanResult",
    "abs_entropy",
    "entropy",
    "exact_lp_transport",
    "holder_seminorm",
    "lq_norm",
    "power_integral",
    "wasserstein",
    "wasserstein_1d",
    "wasserstein_1d_atoms",
    "wasserstein_entropic",
]
