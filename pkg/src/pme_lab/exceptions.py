"""Exception classes for pme-lab."""

from __future__ import annotations

__all__ = [
    "PmeLabError",
    "ConfigError",
    "GridError",
    "InvalidExponentError",
    "NormalizationError",
    "DomainError",
    "SolverError",
    "TransportError",
    "AtomLimitError",
    "FlowError",
    "CflError",
    "RegimeError",
    "UnknownTheoremError",
    "EmbeddingError",
    "InadmissibleWindowError",
    "AuditError",
    "ArtifactError",
]


class PmeLabError(Exception):
    """Base exception for pme-lab."""


class ConfigError(PmeLabError):
    """Error in run configuration.

    ``line`` is the 1-based line of the offending config entry when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GridError(PmeLabError):
    """Invalid grid or time partition."""


class InvalidExponentError(PmeLabError):
    """Exponent outside the range an operation accepts."""


class NormalizationError(PmeLabError):
    """Density is not a probability density where one is required."""


class DomainError(PmeLabError):
    """A field or profile does not fit inside the computational box."""


class SolverError(PmeLabError):
    """Nonlinear solve failed; ``history`` holds the residual per iteration."""

    def __init__(self, message: str, history: list[float] | None = None):
        self.history = list(history or [])
        super().__init__(message)


class TransportError(PmeLabError):
    """Optimal transport solver did not converge."""

    def __init__(
        self,
        message: str,
        marginal_error: float = float("nan"),
        iterations: int = 0,
    ):
        self.marginal_error = marginal_error
        self.iterations = iterations
        super().__init__(message)


class AtomLimitError(PmeLabError):
    """Exact transport requested on more atoms than the oracle accepts."""


class FlowError(PmeLabError):
    """Characteristic left the box by more than the clamp tolerance."""

    def __init__(self, message: str, clamp: float):
        self.clamp = clamp
        super().__init__(message)


class CflError(PmeLabError):
    """Explicit advection step violates the CFL restriction."""

    def __init__(self, message: str, courant: float):
        self.courant = courant
        super().__init__(message)


class RegimeError(PmeLabError):
    """Parameters lie outside the regime an exponent formula is stated for."""

    def __init__(self, message: str, bound: str):
        self.bound = bound
        super().__init__(message)


class UnknownTheoremError(PmeLabError):
    """Theorem or figure identifier is not part of the enumeration."""


class EmbeddingError(PmeLabError):
    """No reduced exponent triple satisfies the tighter condition."""


class InadmissibleWindowError(PmeLabError):
    """Interpolation exponents outside the admissible window."""

    def __init__(self, message: str, bound: str):
        self.bound = bound
        super().__init__(message)


class AuditError(PmeLabError):
    """Trajectory does not carry what an audit needs."""


class ArtifactError(PmeLabError):
    """Artifact already stored with different content."""
