"""pme-lab: porous medium equation with drift, splitting scheme and estimate audits."""

__version__ = "0.1.0"
