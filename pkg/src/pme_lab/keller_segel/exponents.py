"""Exponent arithmetic for L^q solutions of the consumption Keller-Segel system."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from pme_lab.exceptions import InvalidExponentError, RegimeError
from pme_lab.types import KsRegime

__all__ = ["KsAdmissibility", "embedding_residual", "ks_admissible_q", "ks_embedding_m", "ks_q_max"]

THREE_D_WINDOW = (15.0 / 13.0, 7.0 / 6.0)


def ks_q_max(m: float, d: int) -> float:
    """``3d(m−1)/(d−2)``: largest ``q`` the signal bound ``∇c ∈ L⁴`` reaches."""
    return 3.0 * d * (m - 1.0) / (d - 2.0)


def ks_embedding_m(d: int) -> float:
    """``1 + 2(d−2)/(d+10)``: the ``m`` at which ``(r1, r2) = (d, 2)`` is on the embedding line."""
    return 1.0 + 2.0 * (d - 2.0) / (d + 10.0)


def embedding_residual(m: float, d: int, r1: float, r2: float) -> float:
    """``d/r1 + (2 + (d−2)/3)/r2 − (d−2)/(3(m−1))`` at ``q = q_max``."""
    return d / r1 + (2.0 + (d - 2.0) / 3.0) / r2 - (d - 2.0) / (3.0 * (m - 1.0))


@dataclass(frozen=True)
class KsAdmissibility:
    """``q_status`` is ``"admissible"`` up to ``q_max`` and ``"open"`` beyond it."""

    m: float
    d: int
    q_max: float
    regime: KsRegime
    m_embed: float
    embedding_residual: float
    q: float | None = None
    q_status: str | None = None

    def to_dict(self) -> dict[str, object]:
        out = asdict(self)
        out["regime"] = self.regime.value
        return out


def _regime(m: float, d: int) -> KsRegime:
    low, high = THREE_D_WINDOW
    if d == 3 and low - 1e-12 <= m <= high + 1e-12:
        return KsRegime.THREE_D_WINDOW
    if 2.0 * (2 * d - 1) / (3.0 * d) - 1e-12 <= m <= (3.0 * d - 2) / (2.0 * d) + 1e-12:
        return KsRegime.MODERATE_M
    return KsRegime.OPEN


def ks_admissible_q(m: float, d: int, q: float | None = None) -> KsAdmissibility:
    """Largest admissible ``q``, the regime of ``m`` and the embedding endpoint.

    The bounded-solution window at ``d = 3`` takes precedence over the
    moderate-m window it overlaps. A ``q`` above ``q_max`` is tagged
    ``"open"``: no statement is made there either way.

    Raises:
        RegimeError: If ``d < 3``.
        InvalidExponentError: If ``m <= 1``.
    """
    if int(d) != d or d < 3:
        raise RegimeError(f"Keller-Segel exponents need d >= 3, got d={d}", bound="d >= 3")
    if not m > 1:
        raise InvalidExponentError(f"m must exceed 1, got {m}")
    d = int(d)
    q_max = ks_q_max(m, d)
    status = None
    if q is not None:
        status = "admissible" if 1 <= q <= q_max * (1 + 1e-12) else "open"
    m_embed = ks_embedding_m(d)
    return KsAdmissibility(
        m=m,
        d=d,
        q_max=q_max,
        regime=_regime(m, d),
        m_embed=m_embed,
        embedding_residual=embedding_residual(m_embed, d, float(d), 2.0),
        q=q,
        q_status=status,
    )
