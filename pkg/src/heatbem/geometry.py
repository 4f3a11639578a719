"""Polygonal spatial domains, boundary parametrization, and triangulations.

The boundary curve is stored by its counterclockwise vertex list and exposed
through the arclength parametrization gamma.  Volume integrals against the
initial datum use non-conforming triangulations of the domain that are
rebuilt (and cached) per boundary arc: the containing initial square is
dyadically refined until the arc is a full square edge, squares are balanced
to at most one hanging node per edge, and every square is bisected along its
lower-left to upper-right diagonal.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BoundaryCurve:
    """Closed polygon traversed counterclockwise, parametrized by arclength."""

    vertices: np.ndarray  # (m, 2), first vertex not repeated
    corner_params: np.ndarray = field(init=False)
    edge_lengths: np.ndarray = field(init=False)
    total_length: float = field(init=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", verts)
        diffs = np.roll(verts, -1, axis=0) - verts
        lengths = np.hypot(diffs[:, 0], diffs[:, 1])
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        object.__setattr__(self, "edge_lengths", lengths)
        object.__setattr__(self, "corner_params", cum[:-1].copy())
        object.__setattr__(self, "total_length", float(cum[-1]))

    @property
    def n_edges(self) -> int:
        return self.vertices.shape[0]

    def gamma(self, s):
        """Point(s) at arclength s in [0, L]; s = L wraps to the start."""
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < 0.0) or np.any(s_arr > self.total_length):
            raise ValueError("arclength outside [0, L]")
        cum = np.concatenate([self.corner_params, [self.total_length]])
        idx = np.clip(np.searchsorted(cum, s_arr, side="right") - 1, 0, self.n_edges - 1)
        local = (s_arr - cum[idx]) / self.edge_lengths[idx]
        p0 = self.vertices[idx]
        p1 = self.vertices[(idx + 1) % self.n_edges]
        out = p0 + local[..., None] * (p1 - p0)
        return out if s_arr.ndim else out.reshape(2)

    def edge_of_arc(self, c: float, d: float) -> int:
        """Index of the polygon edge containing the arc [c, d], or raise."""
        if not 0.0 <= c < d <= self.total_length:
            raise ValueError("invalid arc parameters")
        cum = np.concatenate([self.corner_params, [self.total_length]])
        i = int(np.searchsorted(cum, c, side="right") - 1)
        if d > cum[i + 1] + 1e-14 * self.total_length:
            raise ValueError(f"arc [{c}, {d}] crosses a corner of the boundary")
        return i

    def arc_segment(self, c: float, d: float):
        """(start point, unit direction, length) of the flat arc [c, d]."""
        i = self.edge_of_arc(c, d)
        p0 = self.vertices[i]
        p1 = self.vertices[(i + 1) % self.n_edges]
        e = (p1 - p0) / self.edge_lengths[i]
        start = p0 + (c - self.corner_params[i]) * e
        return start, e, d - c


@dataclass(frozen=True)
class Domain:
    """Polygonal domain: boundary curve plus the initial square decomposition."""

    name: str
    curve: BoundaryCurve
    initial_squares: tuple  # ((x0, y0, size), ...)
    area: float


def unit_square() -> Domain:
    curve = BoundaryCurve(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    return Domain("unit_square", curve, ((0.0, 0.0, 1.0),), 1.0)


def l_shape() -> Domain:
    """(-1,1)^2 minus the closed third quadrant square; perimeter 8."""
    verts = np.array(
        [[0.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, 0.0], [0.0, 0.0]]
    )
    curve = BoundaryCurve(verts)
    squares = ((0.0, 0.0, 1.0), (-1.0, 0.0, 1.0), (0.0, -1.0, 1.0))
    return Domain("l_shape", curve, squares, 3.0)


DOMAINS = {"unit_square": unit_square, "l_shape": l_shape}


@dataclass(frozen=True)
class CurvilinearTriangle:
    """Affine chart from the reference triangle {z <= 1 - y} into the plane."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def jacobian(self) -> float:
        u = self.b - self.a
        v = self.c - self.a
        return float(u[0] * v[1] - u[1] * v[0])

    @property
    def area(self) -> float:
        return 0.5 * abs(self.jacobian)

    def map(self, y, z):
        """Image points; broadcast over arrays, stacked on the last axis."""
        y = np.asarray(y, dtype=float)[..., None]
        z = np.asarray(z, dtype=float)[..., None]
        return self.a + y * (self.b - self.a) + z * (self.c - self.a)


def map_triangle(tri: CurvilinearTriangle, yz):
    """Affine image of reference coordinates plus the jacobian determinant."""
    y, z = yz
    return tri.map(y, z), tri.jacobian


@dataclass(frozen=True)
class DomainTriangulation:
    triangles: tuple
    anchor_arc: tuple  # (c, d)
    anchor_index: int

    @property
    def total_area(self) -> float:
        return sum(t.area for t in self.triangles)


def _square_corners(x0, y0, h):
    return (
        np.array([x0, y0]),
        np.array([x0 + h, y0]),
        np.array([x0 + h, y0 + h]),
        np.array([x0, y0 + h]),
    )


def _split_square(sq):
    x0, y0, h = sq
    h2 = h / 2.0
    return [(x0, y0, h2), (x0 + h2, y0, h2), (x0, y0 + h2, h2), (x0 + h2, y0 + h2, h2)]


def _squares_adjacent(s1, s2):
    """True if the two squares share an edge piece of positive length."""
    x0, y0, h = s1
    X0, Y0, H = s2
    tol = 1e-12
    for (a0, a1, b0, b1, c, C) in (
        (y0, y0 + h, Y0, Y0 + H, x0, X0),  # vertical contact lines
        (x0, x0 + h, X0, X0 + H, y0, Y0),  # horizontal contact lines
    ):
        overlap = min(a1, b1) - max(a0, b0)
        if overlap > tol:
            if abs(c - (C + H)) < tol or abs((c + h) - C) < tol:
                return True
    return False


def _edge_of_square(sq, p0, p1):
    """Which side of the square the directed segment p0->p1 lies on, or None."""
    corners = _square_corners(*sq)
    sides = [(corners[i], corners[(i + 1) % 4]) for i in range(4)]
    for a, b in sides + [(b, a) for a, b in sides]:
        if np.allclose(a, p0, atol=1e-12) and np.allclose(b, p1, atol=1e-12):
            return a, b
    return None


def _contains_boundary_arc(sq, p0, p1):
    """True if the segment p0-p1 lies on the closure of one side of sq."""
    x0, y0, h = sq
    tol = 1e-12
    for q in (p0, p1):
        if not (x0 - tol <= q[0] <= x0 + h + tol and y0 - tol <= q[1] <= y0 + h + tol):
            return False
    on_side = (
        (abs(p0[0] - x0) < tol and abs(p1[0] - x0) < tol)
        or (abs(p0[0] - x0 - h) < tol and abs(p1[0] - x0 - h) < tol)
        or (abs(p0[1] - y0) < tol and abs(p1[1] - y0) < tol)
        or (abs(p0[1] - y0 - h) < tol and abs(p1[1] - y0 - h) < tol)
    )
    return on_side


def build_triangulation(domain: Domain, c: float, d: float) -> DomainTriangulation:
    """Non-conforming triangulation anchored at the boundary arc [c, d].

    Refines the initial square containing the arc until the arc is a full
    square edge, balances hanging nodes (level difference <= 1), and bisects
    every square along the lower-left to upper-right diagonal.  The unique
    triangle having the arc as a full edge is chart-oriented so that its
    (y, 0) edge traverses the arc with increasing arclength.
    """
    curve = domain.curve
    p0 = curve.gamma(c)
    p1 = curve.gamma(d if d < curve.total_length else 0.0)
    if d == curve.total_length:
        p1 = curve.gamma(0.0)
    curve.edge_of_arc(c, d)  # raises if the arc crosses a corner

    squares = list(domain.initial_squares)
    target = None
    for sq in squares:
        if _contains_boundary_arc(sq, p0, p1):
            target = sq
            break
    if target is None:
        raise ValueError("arc does not lie on the domain boundary")

    # refine the chain containing the arc until it is a full square edge
    while target[2] > (d - c) + 1e-13:
        squares.remove(target)
        children = _split_square(target)
        squares.extend(children)
        target = None
        for sq in children:
            if _contains_boundary_arc(sq, p0, p1):
                target = sq
                break
        if target is None:
            raise ValueError("arc is not dyadically aligned with the domain grid")

    # balance: neighboring squares differ by at most one refinement level
    changed = True
    while changed:
        changed = False
        squares.sort(key=lambda s: (-s[2], s[0], s[1]))
        for i, sq in enumerate(squares):
            for other in squares:
                if other[2] > 2.0 * sq[2] + 1e-13 and _squares_adjacent(sq, other):
                    squares.remove(other)
                    squares.extend(_split_square(other))
                    changed = True
                    break
            if changed:
                break

    squares.sort(key=lambda s: (s[2], s[0], s[1]))
    triangles = []
    anchor_index = -1
    for sq in squares:
        ll, lr, ur, ul = _square_corners(*sq)
        for tri_verts in ((ll, lr, ur), (ll, ur, ul)):
            tri = CurvilinearTriangle(*tri_verts)
            if sq == target and anchor_index < 0:
                side = _edge_of_square(sq, p0, p1)
                pts = [tuple(np.round(v, 12)) for v in tri_verts]
                if (
                    side is not None
                    and tuple(np.round(p0, 12)) in pts
                    and tuple(np.round(p1, 12)) in pts
                ):
                    rest = [v for v in tri_verts if not (
                        np.allclose(v, p0, atol=1e-12) or np.allclose(v, p1, atol=1e-12))]
                    tri = CurvilinearTriangle(p0, p1, rest[0])
                    anchor_index = len(triangles)
            triangles.append(tri)
    if anchor_index < 0:
        raise RuntimeError("anchor triangle not found")
    anchor = triangles[anchor_index]
    if anchor.jacobian <= 0:
        raise RuntimeError("anchor chart is not positively oriented")
    return DomainTriangulation(tuple(triangles), (c, d), anchor_index)


class TriangulationCache:
    """Per-domain cache of triangulations keyed by the anchor arc."""

    def __init__(self, domain: Domain):
        self.domain = domain
        self._cache: dict = {}
        self._lock = threading.Lock()

    def get(self, c: float, d: float) -> DomainTriangulation:
        key = (c, d)
        tri = self._cache.get(key)
        if tri is None:
            tri = build_triangulation(self.domain, c, d)
            with self._lock:
                self._cache.setdefault(key, tri)
        return tri
