"""Box grids, time partitions and discrete calculus."""

from pme_lab.geometry.grid import (
    Grid,
    TimePartition,
    apply_laplacian,
    dirichlet_energy,
    face_gradients,
    flux_divergence,
    gradient,
    integrate,
    mixed_norm,
    neumann_laplacian,
)

__all__ = [
    "Grid",
    "TimePartition",
    "apply_laplacian",
    "dirichlet_energy",
    "face_gradients",
    "flux_divergence",
    "gradient",
    "integrate",
    "mixed_norm",
    "neumann_laplacian",
]
