"""Audit entries, the estimate report and the refinement-stability rule."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "AuditEntry",
    "EstimateReport",
    "RefinementCheck",
    "compare_refinement",
    "jsonable",
    "REPORT_SCHEMA_VERSION",
    "GROWTH_ALLOWANCE",
]

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
GROWTH_ALLOWANCE = 0.10


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become ``None``."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


@dataclass
class AuditEntry:
    """One audited inequality with its numeric evidence.

    ``slack`` is positive when the inequality holds with room to spare.
    """

    name: str
    lhs: float | list[float]
    rhs_terms: dict[str, float] = field(default_factory=dict)
    constant: float | None = None
    passed: bool = False
    slack: float = 0.0
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return jsonable(
            {
                "audit_name": self.name,
                "lhs": self.lhs,
                "rhs_terms": self.rhs_terms,
                "constant": self.constant,
                "pass": self.passed,
                "slack": self.slack,
                "metadata": self.metadata,
            }
        )


@dataclass
class EstimateReport:
    m: float
    q: float
    d: int
    drift: str
    cells: tuple[int, ...]
    n: int | None = None
    entries: list[AuditEntry] = field(default_factory=list)

    def add(self, entry: AuditEntry) -> AuditEntry:
        level = logging.INFO if entry.passed else logging.WARNING
        logger.log(level, f"Audit {entry.name}: {'pass' if entry.passed else 'FAIL'} (slack {entry.slack:.3e})")
        self.entries.append(entry)
        return entry

    def extend(self, entries: list[AuditEntry]) -> None:
        for entry in entries:
            self.add(entry)

    def entry(self, name: str) -> AuditEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def ok(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def failed(self) -> list[str]:
        return [e.name for e in self.entries if not e.passed]

    def to_dict(self) -> dict[str, Any]:
        return jsonable(
            {
                "schema_version": REPORT_SCHEMA_VERSION,
                "run": {
                    "m": self.m,
                    "q": self.q,
                    "d": self.d,
                    "drift": self.drift,
                    "cells": list(self.cells),
                    "n": self.n,
                },
                "ok": self.ok,
                "audits": [e.to_dict() for e in self.entries],
            }
        )


@dataclass(frozen=True)
class RefinementCheck:
    coarse: float
    fine: float
    growth: float
    allowance: float

    @property
    def passed(self) -> bool:
        return self.growth <= self.allowance


def compare_refinement(
    coarse: AuditEntry | float,
    fine: AuditEntry | float,
    growth: float = GROWTH_ALLOWANCE,
) -> RefinementCheck:
    """Relative growth of a fitted constant from one resolution to the next.

    Growth up to ``growth`` is scheme error and passes with a warning; a
    constant that shrinks always passes.
    """
    a = coarse.constant if isinstance(coarse, AuditEntry) else coarse
    b = fine.constant if isinstance(fine, AuditEntry) else fine
    a = 0.0 if a is None else float(a)
    b = 0.0 if b is None else float(b)

    if not (math.isfinite(a) and math.isfinite(b)):
        ratio = math.inf
    elif b <= a:
        ratio = 0.0 if a == 0 else b / a - 1.0
    elif a == 0:
        ratio = math.inf if b > 1e-12 else 0.0
    else:
        ratio = b / a - 1.0

    check = RefinementCheck(coarse=a, fine=b, growth=ratio, allowance=growth)
    if 0 < ratio <= growth:
        logger.warning(f"Fitted constant grew {ratio:.1%} under refinement ({a:.4g} -> {b:.4g})")
    return check
