"""Environment-level settings for pme-lab."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional

from pme_lab.exceptions import ConfigError

if TYPE_CHECKING:
    from pme_lab.runner.loader import RunConfig

__all__ = ["LabSettings", "VALID_LOG_LEVELS"]

DEFAULT_OUT_DIR = "out"
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_NEWTON_TOL = 1e-10
DEFAULT_MAX_ITER = 50

VALID_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


def _file_values(config: Optional["RunConfig"]) -> dict[str, Any]:
    if config is None:
        return {}
    return {
        "out_dir": config.output.directory,
        "newton_tol": config.tolerances.newton_tol,
        "max_iter": config.tolerances.max_iter,
    }


@dataclass
class LabSettings:
    """Output directory, log level and solver defaults for one invocation."""

    out_dir: Path = Path(DEFAULT_OUT_DIR)
    log_level: str = DEFAULT_LOG_LEVEL
    newton_tol: float = DEFAULT_NEWTON_TOL
    max_iter: int = DEFAULT_MAX_ITER

    @classmethod
    def from_env(
        cls,
        *,
        out_dir: Optional[str | Path] = None,
        log_level: Optional[str] = None,
        newton_tol: Optional[float] = None,
        max_iter: Optional[int] = None,
        config: Optional["RunConfig"] = None,
    ) -> "LabSettings":
        """Resolve settings from CLI arguments, env vars and the run config.

        Priority (highest to lowest):
        1. Explicit parameters (CLI args)
        2. Environment variables (PME_LAB_OUT, PME_LAB_LOG_LEVEL)
        3. Run config file
        4. Built-in defaults
        """
        file_cfg = _file_values(config)

        def resolve(explicit, env_key, cfg_key=None):
            if explicit is not None:
                return explicit
            if env_key is not None:
                env_val = os.environ.get(env_key)
                if env_val is not None:
                    return env_val
            if cfg_key and file_cfg.get(cfg_key) is not None:
                return file_cfg[cfg_key]
            return None

        out = resolve(out_dir, "PME_LAB_OUT", "out_dir")
        level = resolve(log_level, "PME_LAB_LOG_LEVEL")
        tol = resolve(newton_tol, None, "newton_tol")
        iterations = resolve(max_iter, None, "max_iter")

        settings = cls(
            out_dir=Path(out) if out else Path(DEFAULT_OUT_DIR),
            log_level=str(level).upper() if level is not None else DEFAULT_LOG_LEVEL,
            newton_tol=float(tol) if tol is not None else DEFAULT_NEWTON_TOL,
            max_iter=int(iterations) if iterations is not None else DEFAULT_MAX_ITER,
        )
        settings.validate()
        return settings

    @property
    def level(self) -> int:
        return getattr(logging, self.log_level)

    def validate(self) -> None:
        """Validate resolved values.

        Raises:
            ConfigError: Listing every invalid value at once.
        """
        problems = []
        if self.log_level not in VALID_LOG_LEVELS:
            problems.append(
                f"log level '{self.log_level}' (use --log-level or PME_LAB_LOG_LEVEL, "
                f"one of {', '.join(sorted(VALID_LOG_LEVELS))})"
            )
        if not self.newton_tol > 0:
            problems.append(f"newton_tol must be positive, got {self.newton_tol}")
        if self.max_iter < 1:
            problems.append(f"max_iter must be >= 1, got {self.max_iter}")

        if problems:
            raise ConfigError("Invalid configuration:\n  - " + "\n  - ".join(problems))
