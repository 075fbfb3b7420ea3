"""Closed-form exponents of the scaling classes for drifts.

All functions are pure. Infinite exponents are passed as ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from pme_lab.exceptions import InvalidExponentError

__all__ = [
    "Thresholds",
    "q_md",
    "lambda_q",
    "scaling_residual",
    "gradient_scaling_residual",
    "m_star",
    "q_star",
    "q2_lower",
    "q2_upper",
    "gamma_1",
    "gamma_2",
    "q_bar",
    "q_tilde",
    "thresholds",
    "tilde_q2_range",
    "sobolev_lift",
    "reciprocal",
]


def reciprocal(q: float) -> float:
    """``1/q`` with ``1/∞ = 0``."""
    if not q > 0:
        raise InvalidExponentError(f"Exponents must be positive, got {q}")
    return 0.0 if math.isinf(q) else 1.0 / q


def _require(m: float, d: int, q: float | None = None) -> None:
    if not m > 1:
        raise InvalidExponentError(f"m must exceed 1, got {m}")
    if int(d) != d or d < 2:
        raise InvalidExponentError(f"d must be an integer >= 2, got {d}")
    if q is not None and not q >= 1:
        raise InvalidExponentError(f"q must be >= 1, got {q}")


def q_md(m: float, d: int, q: float) -> float:
    """``d(m−1)/q``; zero for ``q = ∞``."""
    return d * (m - 1.0) * reciprocal(q)


def lambda_q(m: float, q: float, d: int) -> float:
    """Speed exponent ``min{2, 1 + (d(q−1)+q)/(d(m−1)+q)}``, in ``(1, 2]``."""
    if m < 1 or q < 1 or d < 1:
        raise InvalidExponentError(f"lambda_q needs m >= 1, q >= 1, d >= 1, got ({m}, {q}, {d})")
    if math.isinf(q):
        return 2.0
    return min(2.0, 1.0 + (d * (q - 1.0) + q) / (d * (m - 1.0) + q))


def scaling_residual(m: float, q: float, d: int, q1: float, q2: float) -> float:
    """``d/q1 + (2+Q)/q2 − (1+Q)`` with ``Q = d(m−1)/q``.

    Zero on the scaling-invariant line, nonpositive in the sub-scaling class.
    """
    Q = q_md(m, d, q)
    return d * reciprocal(q1) + (2.0 + Q) * reciprocal(q2) - (1.0 + Q)


def gradient_scaling_residual(m: float, q: float, d: int, q1t: float, q2t: float) -> float:
    """``d/q̃1 + (2+Q)/q̃2 − (2+Q)``, the analogue for ``∇V``."""
    Q = q_md(m, d, q)
    return d * reciprocal(q1t) + (2.0 + Q) * reciprocal(q2t) - (2.0 + Q)


def m_star(d: int) -> float:
    """``(√(d²+6d+1) + d − 1)/(2d)``; decreases to 1 as ``d`` grows."""
    return (math.sqrt(d * d + 6 * d + 1) + (d - 1)) / (2 * d)


def _a(m: float, d: int) -> float:
    return (m * d + 1.0) / (m * d + 2.0)


def q_star(m: float, d: int) -> float | None:
    """``(m−1)/((md+1)/(md+2) − (m+d−2)/(md))``, or ``None`` when the bracket is not positive."""
    _require(m, d)
    denominator = _a(m, d) - (m + d - 2.0) / (m * d)
    if denominator <= 0:
        return None
    return (m - 1.0) / denominator


def q2_lower(m: float, d: int, q: float) -> float:
    """``(2+Q)/(1+Q)``: where the scaling line meets ``1/q1 = 0``."""
    Q = q_md(m, d, q)
    return (2.0 + Q) / (1.0 + Q)


def q2_upper(m: float, d: int, q: float) -> float:
    """Where the scaling line meets the compactness line ``1/q1 = a − (d−2)/(md)``.

    Equals ``(2+Q)/(1+Q − d·a + (d−2)/m)`` with ``a = (md+1)/(md+2)``, and
    ``∞`` once the denominator is nonpositive (``q ≥ q*``).
    """
    _require(m, d, q)
    Q = q_md(m, d, q)
    denominator = 1.0 + Q - d * _a(m, d) + (d - 2.0) / m
    if denominator <= 0:
        return math.inf
    return (2.0 + Q) / denominator


def gamma_1(m: float, d: int, q: float) -> float:
    return (d * (q + m - 1.0) + 2.0 * q) / (m * d + q)


def gamma_2(m: float, d: int, q: float) -> float:
    return (d * (q + m - 1.0) + 2.0 * q) / (d * (q + m - 1.0) + q)


def q_bar(m: float, d: int) -> float:
    """``½(√(d²(m−1)²+4) − d(m−1) + 2)``."""
    s = d * (m - 1.0)
    return 0.5 * (math.sqrt(s * s + 4.0) - s + 2.0)


def q_tilde(m: float, d: int) -> float | None:
    """``½(√(d²(m−1)² − 2d(m²−1) + (3−m)²) − d(m−1) + 3 − m)``; ``None`` if the radicand is negative."""
    s = d * (m - 1.0)
    radicand = s * s - 2.0 * d * (m * m - 1.0) + (3.0 - m) ** 2
    if radicand < 0:
        return None
    return 0.5 * (math.sqrt(radicand) - s + (3.0 - m))


@dataclass(frozen=True)
class Thresholds:
    m: float
    d: int
    q: float
    q_md: float
    lambda_q: float
    lambda_1: float
    m_star: float
    q_star: float | None
    q2_lower: float
    q2_upper: float
    gamma_1: float
    gamma_2: float
    q_bar: float
    q_tilde: float | None

    def to_dict(self) -> dict[str, float | int | None]:
        return asdict(self)


def thresholds(m: float, d: int, q: float) -> Thresholds:
    """Every threshold exponent at ``(m, d, q)``.

    Raises:
        InvalidExponentError: If ``m <= 1``, ``q < 1`` or ``d`` is not an integer >= 2.
    """
    _require(m, d, q)
    return Thresholds(
        m=m,
        d=int(d),
        q=q,
        q_md=q_md(m, d, q),
        lambda_q=lambda_q(m, q, d),
        lambda_1=lambda_q(m, 1.0, d),
        m_star=m_star(d),
        q_star=q_star(m, d),
        q2_lower=q2_lower(m, d, q),
        q2_upper=q2_upper(m, d, q),
        gamma_1=gamma_1(m, d, q),
        gamma_2=gamma_2(m, d, q),
        q_bar=q_bar(m, d),
        q_tilde=q_tilde(m, d),
    )


def tilde_q2_range(m: float, d: int, q: float) -> tuple[float, float]:
    """Open-lower range of ``q̃2`` on which the gradient class embeds in the field class.

    Returns ``(low, high)`` with ``low < q̃2``; ``high`` is ``∞`` (attained)
    when ``m < 1 + q(d−2)/d`` and an exclusive bound ``(2+Q)/(2−d+Q)`` otherwise.
    """
    _require(m, d, q)
    Q = q_md(m, d, q)
    low = (2.0 + Q) / (1.0 + Q)
    denominator = 2.0 - d + Q
    if m < 1.0 + q * (d - 2.0) / d or denominator <= 0:
        return low, math.inf
    return low, (2.0 + Q) / denominator


def sobolev_lift(d: int, q1t: float) -> float:
    """``dq̃1/(d − q̃1)`` for ``1 < q̃1 < d``."""
    if not 1 < q1t < d:
        raise InvalidExponentError(f"Sobolev lift needs 1 < q~1 < d, got q~1={q1t}, d={d}")
    return d * q1t / (d - q1t)
