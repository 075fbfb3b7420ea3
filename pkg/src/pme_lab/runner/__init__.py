"""Configuration-driven experiment runner."""

from pme_lab.runner.artifacts import (
    ArtifactStore,
    DirectoryArtifactStore,
    InMemoryArtifactStore,
    content_hash,
)
from pme_lab.runner.experiments import ExperimentResult, audit_trajectory, compute_trajectory, run
from pme_lab.runner.loader import (
    RunConfig,
    build_run_config,
    dump_run_config,
    load_run_config,
    loads_run_config,
    parse_run_config,
)
from pme_lab.runner.presets import RUN_PRESETS, build_setup, drift_from_section, initial_density

__all__ = [
    "ArtifactStore",
    "DirectoryArtifactStore",
    "ExperimentResult",
    "InMemoryArtifactStore",
    "RUN_PRESETS",
    "RunConfig",
    "audit_trajectory",
    "build_run_config",
    "build_setup",
    "compute_trajectory",
    "content_hash",
    "drift_from_section",
    "dump_run_config",
    "initial_density",
    "load_run_config",
    "loads_run_config",
    "parse_run_config",
    "run",
]
