"""Labelled vertices of the admissible regions in the ``(1/q1, 1/q2)`` plane.

Each diagram is valid in a stated parameter regime; outside it
:func:`region_vertices` raises :class:`RegimeError` naming the violated
bound. Diagrams also record which vertices lie on which scaling line
``S_{m,q}`` so the claim can be checked against :func:`scaling_residual`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from pme_lab.classes.exponents import gamma_1, m_star, q_bar, q_star, q_tilde
from pme_lab.exceptions import InvalidExponentError, RegimeError, UnknownTheoremError
from pme_lab.types import FigureId

__all__ = [
    "FigureRegion",
    "LineMembership",
    "region_vertices",
    "parse_figure",
    "polygon_contains",
    "point_cloud",
]

Point = tuple[float, float]


def parse_figure(figure: FigureId | str) -> FigureId:
    if isinstance(figure, FigureId):
        return figure
    try:
        return FigureId(figure)
    except ValueError as e:
        known = ", ".join(f.value for f in FigureId)
        raise UnknownTheoremError(f"Unknown figure '{figure}' (expected one of: {known})") from e


@dataclass(frozen=True)
class LineMembership:
    """Vertex ``label`` lies on the scaling line of ``(m_line, q_line)``."""

    label: str
    m_line: float
    q_line: float


@dataclass
class FigureRegion:
    figure: FigureId
    m: float
    d: int
    q: float
    vertices: dict[str, Point] = field(default_factory=dict)
    polygons: dict[str, tuple[str, ...]] = field(default_factory=dict)
    memberships: list[LineMembership] = field(default_factory=list)

    def polygon(self, name: str) -> np.ndarray:
        return np.array([self.vertices[label] for label in self.polygons[name]])

    def line_segments(self) -> list[dict[str, object]]:
        """Closed polygon edges, one entry per edge."""
        out = []
        for name, labels in self.polygons.items():
            for a, b in zip(labels, labels[1:] + labels[:1]):
                out.append({"polygon": name, "from": a, "to": b, "start": self.vertices[a], "end": self.vertices[b]})
        return out

    def to_dict(self) -> dict[str, object]:
        return {
            "figure": self.figure.value,
            "parameters": {"m": self.m, "d": self.d, "q": self.q},
            "vertices": [{"label": k, "x": v[0], "y": v[1]} for k, v in self.vertices.items()],
            "polygons": {k: list(v) for k, v in self.polygons.items()},
            "line_segments": [
                {**s, "start": list(s["start"]), "end": list(s["end"])} for s in self.line_segments()
            ],
            "memberships": [
                {"label": mb.label, "m": mb.m_line, "q": mb.q_line} for mb in self.memberships
            ],
        }


def _regime(ok: bool, bound: str, figure: FigureId) -> None:
    if not ok:
        raise RegimeError(f"Figure '{figure.value}' requires {bound}", bound=bound)


def _mid_d_bound(m: float) -> float:
    return max(2.0, 2 * m / ((2 * m - 1) * (m - 1)))


def _field_vertices(m: float, d: int) -> dict[str, Point]:
    """Vertices shared by the general-drift diagrams."""
    b_point = (1 / d, 0.0)
    c_point = ((1 + d * (m - 1)) / (d * (2 * m - 1)), (m - 1) / (2 * m - 1))
    slope = d / (d - 2)
    x_edge = (m - 1) / (2 * m)
    return {
        "a": (0.0, 0.5),
        "b": b_point,
        "A": (x_edge, (d + m * (2 - d)) / (4 * m)),
        "B": (1 / (d * (2 * m - 1)), (m - 1) / (2 * m - 1)),
        "C": c_point,
        "D": (((2 - m) + d * (m - 1)) / (m * d), (m - 1) / m),
        "E": ((m - 1) / 2, 0.5),
        "F": (x_edge, 0.5),
        "G": (x_edge, (m - 1) / (2 * m - 1)),
        "H": (x_edge, slope * (x_edge - 1 / d)),
        "c": ((m + d * (m - 1)) / (m * d), 0.0),
    }


def _ac_moderate(figure: FigureId, m: float, d: int, q: float) -> FigureRegion:
    _regime(1 < m <= 2, "1 < m <= 2", figure)
    low = _mid_d_bound(m)
    high = 2 * m / (m - 1)
    every = _field_vertices(m, d)
    if figure is FigureId.AC_MODERATE_M:
        _regime(2 < d <= low, "2 < d <= max(2, 2m/((2m-1)(m-1)))", figure)
        labels = ("a", "b", "A", "B", "C", "D", "E", "F", "c")
        polygons = {"ac-lq": ("A", "B", "C", "D", "E", "F"), "weak-lq": ("b", "C", "B")}
    elif figure is FigureId.AC_MODERATE_M_MID_D:
        _regime(low < d <= high, "max(2, 2m/((2m-1)(m-1))) < d <= 2m/(m-1)", figure)
        labels = ("a", "b", "A", "B", "C", "D", "E", "F", "G", "c")
        polygons = {"ac-lq": ("G", "C", "D", "E", "F"), "weak-lq": ("G", "A", "b", "C")}
    else:
        _regime(d > high, "d > 2m/(m-1)", figure)
        labels = ("a", "b", "A", "B", "C", "D", "E", "F", "G", "H", "c")
        polygons = {"ac-lq": ("G", "C", "D", "E", "F"), "weak-lq": ("G", "H", "C")}
    region = FigureRegion(figure, m, d, q, {k: every[k] for k in labels}, polygons)
    region.memberships = [LineMembership(k, m, math.inf) for k in ("a", "b", "A", "B") if k in labels]
    region.memberships += [LineMembership(k, m, 1.0) for k in ("D", "E")]
    region.memberships += [LineMembership(k, m, m) for k in ("C", "F", "c")]
    return region


def _ac_large(figure: FigureId, m: float, d: int, q: float) -> FigureRegion:
    _regime(m > 2, "m > 2", figure)
    high = 2 * m / (m - 1)
    every = _field_vertices(m, d)
    every["D"] = (0.5, 0.5)
    every["E"] = ((m - 1) / (2 * m), 0.5)
    if figure is FigureId.AC_LARGE_M:
        _regime(2 < d <= high, "2 < d <= 2m/(m-1)", figure)
        labels = ("a", "b", "A", "B", "C", "D", "E", "G")
        polygons = {"ac-lq": ("G", "C", "D", "E"), "weak-lq": ("G", "A", "b", "C")}
        on_infinity = ("a", "b", "A", "B")
    else:
        _regime(d > high, "d > 2m/(m-1)", figure)
        every["A"] = ((m - 1) / (2 * m), 0.0)
        labels = ("a", "b", "A", "B", "C", "D", "E", "G", "H")
        polygons = {"ac-lq": ("G", "C", "D", "E"), "weak-lq": ("G", "H", "C")}
        on_infinity = ("a", "b", "B")
    region = FigureRegion(figure, m, d, q, {k: every[k] for k in labels}, polygons)
    region.memberships = [LineMembership(k, m, math.inf) for k in on_infinity]
    region.memberships += [LineMembership(k, m, m) for k in ("C", "E")]
    return region


def _divfree_d_vertex(m: float, d: int) -> Point:
    a = (m * d + 1) / (m * d + 2)
    return (a - (d - 2) / (m * d), a - 1 / m)


def _divfree(figure: FigureId, m: float, d: int, q: float) -> FigureRegion:
    ms = m_star(d)
    _regime(d > 2, "d > 2", figure)
    _regime(m > ms, f"m > m* = {ms:.6g}", figure)
    s = d * (m - 1)
    if figure is FigureId.DIVFREE_ENTROPY:
        m_line, q_line = ms, 1.0
        Q_line = d * (ms - 1)
    else:
        _regime(q > 1, "q > 1", figure)
        qs = q_star(m, d)
        _regime(qs is not None, "q* defined", figure)
        m_line, q_line = m, qs
        Q_line = d * (m - 1) / qs
    vertices = {
        "A": (0.0, 0.5),
        "B": (1 / d, 0.0),
        "C": ((1 + Q_line) / d, 0.0),
        "D": _divfree_d_vertex(m, d),
        "E": (0.0, (1 + s) / (2 + s)),
        "F": (0.0, (1 + Q_line) / (2 + Q_line)),
    }
    polygon = "divnonneg-weak-entropy" if figure is FigureId.DIVFREE_ENTROPY else "divnonneg-weak-lq-large-m"
    region = FigureRegion(figure, m, d, q, vertices, {polygon: ("A", "B", "C", "D", "E")})
    region.memberships = [
        LineMembership("A", m, math.inf),
        LineMembership("B", m, math.inf),
        LineMembership("C", m_line, q_line),
        LineMembership("F", m_line, q_line),
        LineMembership("D", m, 1.0),
        LineMembership("E", m, 1.0),
    ]
    return region


def _compact(figure: FigureId, m: float, d: int, q: float) -> FigureRegion:
    ms = m_star(d)
    _regime(d > 2, "d > 2", figure)
    s = d * (m - 1)
    qb = q_bar(m, d)
    vertices = {
        "C": ((2 + s) / (2 * m * d), (m - 1) / (2 * m)),
        "E": ((1 + s) / d, 0.0),
        "F": (0.0, (1 + s) / (2 + s)),
        "G": (0.0, (qb + s) / (2 * qb + s)),
        "H": ((m - 1) / (2 * (m + 1)), 0.5),
    }
    memberships = [
        LineMembership("C", m, m + 1),
        LineMembership("H", m, m + 1),
        LineMembership("E", m, 1.0),
        LineMembership("F", m, 1.0),
        LineMembership("G", m, qb),
    ]
    if figure is FigureId.COMPACT_MODERATE_M:
        _regime(m <= ms, f"1 < m <= m* = {ms:.6g}", figure)
        qt = q_tilde(m, d)
        _regime(qt is not None, "q~ defined", figure)
        vertices["D"] = ((qt + s) / (d * qt), 0.0)
        memberships.append(LineMembership("D", m, qt))
    else:
        _regime(m > ms, f"m > m* = {ms:.6g}", figure)
        _regime(1 < q <= m + 1, "1 < q <= m+1", figure)
        inv = 1 / gamma_1(m, d, q)
        vertices["D"] = (inv - (d - 2) / (d * (q + m - 1)), inv - 1 / (q + m - 1))
    region = FigureRegion(
        figure, m, d, q, vertices, {"whole-space-divnonneg": ("C", "D", "E", "F", "G", "H")}
    )
    region.memberships = memberships
    return region


def region_vertices(figure: FigureId | str, m: float, d: int, q: float = 1.0) -> FigureRegion:
    """Evaluate the labelled vertices of one diagram.

    Raises:
        UnknownTheoremError: If the figure identifier is unknown.
        RegimeError: If ``(m, d, q)`` lies outside the diagram's regime.
    """
    figure = parse_figure(figure)
    if not m > 1:
        raise InvalidExponentError(f"m must exceed 1, got {m}")
    if int(d) != d or d < 2:
        raise InvalidExponentError(f"d must be an integer >= 2, got {d}")
    d = int(d)
    if figure in (FigureId.AC_MODERATE_M, FigureId.AC_MODERATE_M_MID_D, FigureId.AC_MODERATE_M_HIGH_D):
        return _ac_moderate(figure, m, d, q)
    if figure in (FigureId.AC_LARGE_M, FigureId.AC_LARGE_M_HIGH_D):
        return _ac_large(figure, m, d, q)
    if figure in (FigureId.DIVFREE_ENTROPY, FigureId.DIVFREE_LQ):
        return _divfree(figure, m, d, q)
    return _compact(figure, m, d, q)


def polygon_contains(polygon: np.ndarray, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Even-odd test; points within ``tol`` of an edge count as inside."""
    points = np.asarray(points, dtype=float)
    px, py = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    on_edge = np.zeros(len(points), dtype=bool)
    n = len(polygon)
    for i in range(n):
        x0, y0 = polygon[i]
        x1, y1 = polygon[(i + 1) % n]
        crosses = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (px < x_at)

        ex, ey = x1 - x0, y1 - y0
        length2 = ex * ex + ey * ey
        t = np.clip(((px - x0) * ex + (py - y0) * ey) / length2, 0.0, 1.0) if length2 > 0 else 0.0
        dist = np.hypot(px - (x0 + t * ex), py - (y0 + t * ey))
        on_edge |= dist <= tol
    return inside | on_edge


def point_cloud(region: FigureRegion, resolution: int = 200) -> list[dict[str, float | str]]:
    """Lattice points of ``[0, 1]²`` inside each polygon of the diagram."""
    axis = (np.arange(resolution) + 0.5) / resolution
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    lattice = np.column_stack([xx.ravel(), yy.ravel()])
    rows: list[dict[str, float | str]] = []
    for name in region.polygons:
        mask = polygon_contains(region.polygon(name), lattice)
        for x, y in lattice[mask]:
            rows.append({"polygon": name, "inv_q1": float(x), "inv_q2": float(y)})
    return rows
