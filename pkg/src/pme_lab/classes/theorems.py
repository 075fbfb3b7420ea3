"""Hypothesis tables of the existence statements as exponent predicates.

Every condition is evaluated on reciprocals ``x = 1/q1`` and ``y = 1/q2``
so that infinite exponents are the exact value 0. Inequalities that are
strict only in two dimensions use a guard band of 1e-12 there; a value
inside the band is reported as ``boundary`` and counts as violated.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

from pme_lab.classes.exponents import (
    gamma_1,
    gamma_2,
    gradient_scaling_residual,
    lambda_q,
    m_star,
    q2_lower,
    q2_upper,
    q_bar,
    q_md,
    q_star,
    reciprocal,
    scaling_residual,
    thresholds,
)
from pme_lab.exceptions import InvalidExponentError, UnknownTheoremError
from pme_lab.types import DriftStructure, TheoremId

__all__ = [
    "Constraint",
    "ClassQuery",
    "ClassVerdict",
    "theorem_admissible",
    "parse_theorem",
    "GUARD",
]

logger = logging.getLogger(__name__)

GUARD = 1e-12


def parse_theorem(theorem: TheoremId | str) -> TheoremId:
    if isinstance(theorem, TheoremId):
        return theorem
    try:
        return TheoremId(theorem)
    except ValueError as e:
        known = ", ".join(t.value for t in TheoremId)
        raise UnknownTheoremError(f"Unknown theorem '{theorem}' (expected one of: {known})") from e


@dataclass(frozen=True)
class Constraint:
    """One named inequality; ``margin`` is positive on the satisfied side."""

    name: str
    satisfied: bool
    margin: float
    strict: bool = False
    boundary: bool = False


@dataclass(frozen=True)
class ClassQuery:
    """Exponents to test against one theorem.

    For ``gradient-*`` theorems ``(q1, q2)`` is read as ``(q̃1, q̃2)``.
    ``structure`` defaults to the structure the theorem assumes.
    """

    m: float
    q: float
    d: int
    q1: float
    q2: float
    theorem: TheoremId
    structure: DriftStructure | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "theorem", parse_theorem(self.theorem))
        if isinstance(self.structure, str):
            object.__setattr__(self, "structure", DriftStructure(self.structure))
        if not self.m > 1:
            raise InvalidExponentError(f"m must exceed 1, got {self.m}")
        if not self.q >= 1:
            raise InvalidExponentError(f"q must be >= 1, got {self.q}")
        if int(self.d) != self.d or self.d < 2:
            raise InvalidExponentError(f"d must be an integer >= 2, got {self.d}")
        reciprocal(self.q1)
        reciprocal(self.q2)

    @property
    def effective_q(self) -> float:
        """``q`` used in the scaling relation: 1 for entropy statements."""
        return 1.0 if self.theorem.is_entropy else self.q

    @property
    def effective_structure(self) -> DriftStructure:
        if self.structure is not None:
            return self.structure
        if self.theorem.needs_divnonneg:
            return DriftStructure.DIV_NONNEG
        if self.theorem.is_gradient:
            return DriftStructure.GRADIENT_CLASS
        return DriftStructure.GENERAL


@dataclass
class ClassVerdict:
    theorem: TheoremId
    admissible: bool
    constraints: list[Constraint] = field(default_factory=list)
    binding: list[str] = field(default_factory=list)
    q_md: float = 0.0
    lambda_q: float = 0.0
    residual: float = 0.0
    thresholds: dict[str, float | int | None] = field(default_factory=dict)

    def constraint(self, name: str) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list[str]:
        return [c.name for c in self.constraints if not c.satisfied]


class _Checks:
    """Collects constraints; ``strict2`` marks inequalities strict at d = 2."""

    def __init__(self, d: int):
        self.two_d = d == 2
        self.items: list[Constraint] = []

    def at_most(self, name: str, value: float, bound: float, strict2: bool = False, strict: bool = False) -> None:
        strict = strict or (strict2 and self.two_d)
        margin = bound - value
        if strict:
            boundary = abs(margin) <= GUARD
            ok = margin > GUARD
        else:
            boundary = False
            ok = margin >= -GUARD
        self.items.append(Constraint(name, ok, margin, strict, boundary))

    def at_least(self, name: str, value: float, bound: float, strict2: bool = False, strict: bool = False) -> None:
        self.at_most(name, -value, -bound, strict2=strict2, strict=strict)

    def holds(self, name: str, ok: bool) -> None:
        self.items.append(Constraint(name, bool(ok), 1.0 if ok else -1.0))

    # Bounds on q2 expressed on y = 1/q2 so that infinite bounds are exact.
    def q2_at_least(self, name: str, y: float, low: float, strict2: bool = False, strict: bool = False) -> None:
        self.at_most(name, y, reciprocal(low), strict2=strict2, strict=strict)

    def q2_at_most(self, name: str, y: float, high: float, strict2: bool = False, strict: bool = False) -> None:
        self.at_least(name, y, reciprocal(high), strict2=strict2, strict=strict)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= GUARD * max(1.0, abs(b))


@dataclass(frozen=True)
class QueryView:
    m: float
    q: float
    d: int
    x: float
    y: float
    Q: float

    @property
    def q1(self) -> float:
        return math.inf if self.x == 0 else 1.0 / self.x


def _q_conditions(c: _Checks, v: QueryView) -> None:
    c.at_least("q > 1", v.q, 1.0, strict=True)


def _upper_lq(v: QueryView) -> tuple[str, float]:
    if v.q <= v.m:
        return "q2 <= (q+m-1)/(m-1)", (v.q + v.m - 1) / (v.m - 1)
    return "q2 <= (2m-1)/(m-1)", (2 * v.m - 1) / (v.m - 1)


def _strict_name(name: str, strict: bool) -> str:
    return name.replace("<=", "<") if strict else name


def _field_entropy(c: _Checks, v: QueryView) -> None:
    c.at_most("m <= 2", v.m, 2.0)
    c.q2_at_least("q2 >= 2", v.y, 2.0)
    c.q2_at_most(_strict_name("q2 <= m/(m-1)", c.two_d), v.y, v.m / (v.m - 1), strict2=True)


def _field_lq(c: _Checks, v: QueryView) -> None:
    _q_conditions(c, v)
    c.at_least("q >= m-1", v.q, v.m - 1)
    c.q2_at_least("q2 >= 2", v.y, 2.0)
    c.q2_at_most(
        _strict_name("q2 <= (q+m-1)/(m-1)", c.two_d), v.y, (v.q + v.m - 1) / (v.m - 1), strict2=True
    )


def _ac_lq(c: _Checks, v: QueryView) -> None:
    _q_conditions(c, v)
    c.at_least("q >= m-1", v.q, v.m - 1)
    c.at_least("q1 <= 2m/(m-1)", v.x, (v.m - 1) / (2 * v.m))
    c.q2_at_least("q2 >= 2", v.y, 2.0)
    name, upper = _upper_lq(v)
    c.q2_at_most(_strict_name(name, c.two_d), v.y, upper, strict2=True)


def _finite_q2(c: _Checks, v: QueryView) -> None:
    c.at_least("q2 < inf", v.y, 0.0, strict=True)


def _divnonneg_entropy(c: _Checks, v: QueryView) -> None:
    ms = m_star(v.d)
    c.q2_at_least("q2 >= q2_lower", v.y, q2_lower(v.m, v.d, 1.0))
    if c.two_d and _close(v.m, ms):
        _finite_q2(c, v)
    elif v.m > ms:
        c.q2_at_most(
            _strict_name("q2 <= q2_upper", c.two_d), v.y, q2_upper(v.m, v.d, 1.0), strict2=True
        )


def _divnonneg_lq_small_m(c: _Checks, v: QueryView) -> None:
    _q_conditions(c, v)
    ms = m_star(v.d)
    c.at_most("m <= m*", v.m, ms)
    c.q2_at_least("q2 >= q2_lower", v.y, q2_lower(v.m, v.d, v.q))
    if c.two_d and _close(v.m, ms):
        _finite_q2(c, v)


def _divnonneg_lq_large_m(c: _Checks, v: QueryView) -> None:
    _q_conditions(c, v)
    c.at_least("m > m*", v.m, m_star(v.d), strict=True)
    c.q2_at_least("q2 >= q2_lower", v.y, q2_lower(v.m, v.d, v.q))
    qs = q_star(v.m, v.d)
    if c.two_d and qs is not None and _close(v.q, qs):
        _finite_q2(c, v)
        return
    upper = q2_upper(v.m, v.d, v.q)
    if not math.isinf(upper):
        c.q2_at_most(_strict_name("q2 <= q2_upper", c.two_d), v.y, upper, strict2=True)


def _divnonneg_ac_entropy(c: _Checks, v: QueryView) -> None:
    lam = lambda_q(v.m, 1.0, v.d)
    c.q2_at_least("q2 >= lambda_1", v.y, lam)
    c.q2_at_most(
        _strict_name("q2 <= lambda_1 m/(m-1)", c.two_d), v.y, lam * v.m / (v.m - 1), strict2=True
    )


def _divnonneg_ac_lq(c: _Checks, v: QueryView) -> None:
    _q_conditions(c, v)
    if v.q <= v.m:
        lam = lambda_q(v.m, v.q, v.d)
        c.q2_at_least("q2 >= lambda_q", v.y, lam)
        c.q2_at_most(
            _strict_name("q2 <= lambda_q (q+m-1)/(q+m-2)", c.two_d),
            v.y,
            lam * (v.q + v.m - 1) / (v.q + v.m - 2),
            strict2=True,
        )
    else:
        c.at_least("q1 <= 2m/(m-1)", v.x, (v.m - 1) / (2 * v.m))
        c.q2_at_least("q2 >= 2", v.y, 2.0)
        c.q2_at_most(
            _strict_name("q2 <= (2m-1)/(m-1)", c.two_d), v.y, (2 * v.m - 1) / (v.m - 1), strict2=True
        )


def _divnonneg_ac_embedded(c: _Checks, v: QueryView) -> None:
    _q_conditions(c, v)
    c.q2_at_least("q2 > q2_lower", v.y, q2_lower(v.m, v.d, v.q), strict=True)
    if v.q <= v.m * v.d / (v.d - 1):
        lam = lambda_q(v.m, 1.0, v.d)
        c.q2_at_most(
            _strict_name("q2 <= lambda_1 m/(m-1)", c.two_d), v.y, lam * v.m / (v.m - 1), strict2=True
        )


def _gradient_base(c: _Checks, v: QueryView) -> None:
    c.at_least("q~1 > 1", v.q1, 1.0, strict=True)
    c.at_most("q~1 < d", v.q1, float(v.d), strict=True)


def _gradient_entropy(c: _Checks, v: QueryView) -> None:
    _gradient_base(c, v)
    c.q2_at_least("q~2 > q2_lower", v.y, q2_lower(v.m, v.d, 1.0), strict=True)
    c.q2_at_most(_strict_name("q~2 <= m/(m-1)", c.two_d), v.y, v.m / (v.m - 1), strict2=True)


def _gradient_lq(c: _Checks, v: QueryView) -> None:
    _q_conditions(c, v)
    _gradient_base(c, v)
    c.q2_at_least("q~2 > q2_lower", v.y, q2_lower(v.m, v.d, v.q), strict=True)
    c.q2_at_most(
        _strict_name("q~2 <= (q+m-1)/(m-1)", c.two_d), v.y, (v.q + v.m - 1) / (v.m - 1), strict2=True
    )


def _gradient_ac_lq(c: _Checks, v: QueryView) -> None:
    _q_conditions(c, v)
    _gradient_base(c, v)
    c.q2_at_least("q~2 > q2_lower", v.y, q2_lower(v.m, v.d, v.q), strict=True)
    name, upper = _upper_lq(v)
    c.q2_at_most(_strict_name(name.replace("q2", "q~2"), c.two_d), v.y, upper, strict2=True)


def _gradient_ac_embedded(c: _Checks, v: QueryView) -> None:
    _q_conditions(c, v)
    _gradient_base(c, v)
    low = (2 * v.m - 1) / (v.m - 1)
    if c.two_d:
        c.q2_at_least("q~2 >= (2m-1)/(m-1)", v.y, low)
    else:
        c.q2_at_least("q~2 > (2m-1)/(m-1)", v.y, low, strict=True)
    c.q2_at_most(
        _strict_name("q~2 <= (q+m-1)/(m-1)", c.two_d), v.y, (v.q + v.m - 1) / (v.m - 1), strict2=True
    )


def _whole_space(c: _Checks, v: QueryView) -> None:
    _q_conditions(c, v)
    c.at_most("q <= m+1", v.q, v.m + 1)
    g1 = gamma_1(v.m, v.d, v.q)
    if v.q <= q_bar(v.m, v.d):
        c.q2_at_least("q2 >= q2_lower", v.y, q2_lower(v.m, v.d, v.q))
    else:
        c.q2_at_least("q2 >= gamma_1", v.y, g1)
    c.at_least(
        _strict_name("q2 <= (1/gamma_1 - 1/(q+m-1))^-1", c.two_d),
        v.y,
        1 / g1 - 1 / (v.q + v.m - 1),
        strict2=True,
    )


def _compact_linear(c: _Checks, v: QueryView) -> None:
    c.at_least("q >= 1", v.q, 1.0)
    c.at_most("q <= m+1", v.q, v.m + 1)
    inv = 1 / gamma_1(v.m, v.d, v.q)
    c.at_least("1/q1 >= 1/gamma_1 - 1/q", v.x, inv - 1 / v.q)
    c.at_most(
        _strict_name("1/q1 <= 1/gamma_1 - (d-2)/(d(q+m-1))", c.two_d),
        v.x,
        inv - (v.d - 2) / (v.d * (v.q + v.m - 1)),
        strict2=True,
    )
    c.at_least(
        "1/q2 > 1/gamma_1 - 1/(q+m-1)" if c.two_d else "1/q2 >= 1/gamma_1 - 1/(q+m-1)",
        v.y,
        inv - 1 / (v.q + v.m - 1),
        strict2=True,
    )
    c.at_most("1/q2 <= 1/gamma_1", v.y, inv)


def _compact_power(c: _Checks, v: QueryView) -> None:
    c.at_least("q >= max(1, m-1)", v.q, max(1.0, v.m - 1))
    inv = 1 / gamma_2(v.m, v.d, v.q)
    span = v.d * (v.q + v.m - 1)
    c.at_least("1/q1 >= q/(d(q+m-1)+2q)", v.x, v.q / (span + 2 * v.q))
    c.at_most(
        _strict_name("1/q1 <= 1/gamma_2 - q(d-2)/(d(q+m-1))", c.two_d),
        v.x,
        inv - v.q * (v.d - 2) / span,
        strict2=True,
    )
    c.at_least(
        "1/q2 > 1/gamma_2 - q/(q+m-1)" if c.two_d else "1/q2 >= 1/gamma_2 - q/(q+m-1)",
        v.y,
        inv - v.q / (v.q + v.m - 1),
        strict2=True,
    )
    c.at_most("1/q2 <= 1/gamma_2", v.y, inv)


_TABLE: dict[TheoremId, Callable[[_Checks, QueryView], None]] = {
    TheoremId.WEAK_ENTROPY: _field_entropy,
    TheoremId.WEAK_LQ: _field_lq,
    TheoremId.AC_ENTROPY: _field_entropy,
    TheoremId.AC_LQ: _ac_lq,
    TheoremId.AC_EMBEDDED: _field_lq,
    TheoremId.DIVNONNEG_WEAK_ENTROPY: _divnonneg_entropy,
    TheoremId.DIVNONNEG_WEAK_LQ_SMALL_M: _divnonneg_lq_small_m,
    TheoremId.DIVNONNEG_WEAK_LQ_LARGE_M: _divnonneg_lq_large_m,
    TheoremId.DIVNONNEG_AC_ENTROPY: _divnonneg_ac_entropy,
    TheoremId.DIVNONNEG_AC_LQ: _divnonneg_ac_lq,
    TheoremId.DIVNONNEG_AC_EMBEDDED: _divnonneg_ac_embedded,
    TheoremId.GRADIENT_WEAK_ENTROPY: _gradient_entropy,
    TheoremId.GRADIENT_WEAK_LQ: _gradient_lq,
    TheoremId.GRADIENT_AC_ENTROPY: _gradient_entropy,
    TheoremId.GRADIENT_AC_LQ: _gradient_ac_lq,
    TheoremId.GRADIENT_AC_EMBEDDED: _gradient_ac_embedded,
    TheoremId.WHOLE_SPACE_DIVNONNEG: _whole_space,
    TheoremId.COMPACT_LINEAR: _compact_linear,
    TheoremId.COMPACT_POWER: _compact_power,
}


def theorem_admissible(query: ClassQuery) -> ClassVerdict:
    """Evaluate the hypothesis set of ``query.theorem`` at the query's exponents.

    Besides the theorem's own inequalities every verdict checks the
    sub-scaling relation (``d/q̃1 + (2+Q)/q̃2 <= 2+Q`` for gradient
    statements) and, where the theorem assumes it, ``div V >= 0``.
    """
    theorem = query.theorem
    q = query.effective_q
    x, y = reciprocal(query.q1), reciprocal(query.q2)
    view = QueryView(m=query.m, q=q, d=int(query.d), x=x, y=y, Q=q_md(query.m, query.d, q))

    checks = _Checks(view.d)
    if theorem.needs_divnonneg:
        checks.holds("div V >= 0", query.effective_structure is DriftStructure.DIV_NONNEG)
    _TABLE[theorem](checks, view)

    if theorem.is_gradient:
        residual = gradient_scaling_residual(query.m, q, view.d, query.q1, query.q2)
        checks.at_most("d/q~1 + (2+Q)/q~2 <= 2+Q", residual, 0.0)
    else:
        residual = scaling_residual(query.m, q, view.d, query.q1, query.q2)
        checks.at_most("d/q1 + (2+Q)/q2 <= 1+Q", residual, 0.0)

    failed = [c.name for c in checks.items if not c.satisfied]
    if failed:
        binding = failed
    else:
        binding = [c.name for c in checks.items if abs(c.margin) <= 1e-9 and c.name != "div V >= 0"]

    verdict = ClassVerdict(
        theorem=theorem,
        admissible=not failed,
        constraints=checks.items,
        binding=binding,
        q_md=view.Q,
        lambda_q=lambda_q(query.m, q, view.d),
        residual=residual,
        thresholds=thresholds(query.m, view.d, q).to_dict(),
    )
    logger.debug(
        f"{theorem.value} at (m={query.m:g}, q={q:g}, d={view.d}, q1={query.q1:g}, "
        f"q2={query.q2:g}): {'admissible' if verdict.admissible else 'fails ' + ', '.join(failed)}"
    )
    return verdict
