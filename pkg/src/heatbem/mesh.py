"""Prismatic space-time meshes of the lateral boundary [0,T] x Gamma.

Elements are tensor products of a time slab and a boundary arc, each with
its own dyadic refinement level, so space and time can be refined
independently.  Meshes are immutable; every refinement returns a new mesh
carrying a parent map for one generation (used by the h-h/2 prolongation).

All slab/arc endpoints are dyadic rationals produced by repeated bisection
of integer-length initial intervals, hence exactly representable: float
comparisons between them are exact and are used deliberately throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Domain


@dataclass(frozen=True)
class TimeSlab:
    a: float
    b: float
    level_t: int

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class SpaceArc:
    c: float
    d: float
    level_x: int

    @property
    def length(self) -> float:
        return self.d - self.c


@dataclass(frozen=True)
class PrismElement:
    slab: TimeSlab
    arc: SpaceArc
    id: int


class SpaceTimeMesh:
    """Immutable element collection with array storage for hot queries."""

    def __init__(self, domain: Domain, T: float, a, b, c, d, lt, lx,
                 parent_ids=None):
        self.domain = domain
        self.T = float(T)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.d = np.asarray(d, dtype=float)
        self.lt = np.asarray(lt, dtype=np.int32)
        self.lx = np.asarray(lx, dtype=np.int32)
        self.parent_ids = None if parent_ids is None else np.asarray(parent_ids, dtype=np.int64)
        for arr in (self.b, self.c, self.d, self.lt, self.lx):
            if arr.shape != self.a.shape:
                raise ValueError("inconsistent element arrays")
        self._arc_key = None
        self._facet_pairs = None

    @property
    def n(self) -> int:
        return self.a.size

    def __len__(self) -> int:
        return self.n

    def element(self, i: int) -> PrismElement:
        return PrismElement(
            TimeSlab(float(self.a[i]), float(self.b[i]), int(self.lt[i])),
            SpaceArc(float(self.c[i]), float(self.d[i]), int(self.lx[i])),
            i,
        )

    @property
    def elements(self):
        return [self.element(i) for i in range(self.n)]

    @property
    def h_t(self):
        return self.b - self.a

    @property
    def h_x(self):
        return self.d - self.c

    def total_measure(self) -> float:
        return math.fsum((self.b - self.a) * (self.d - self.c))

    # -- adjacency ---------------------------------------------------------

    def _arc_touch_matrix(self):
        """Closed-set arc intersection (touch or overlap) including the wrap."""
        L = self.domain.curve.total_length
        c, d = self.c, self.d
        lo = np.maximum(c[:, None], c[None, :])
        hi = np.minimum(d[:, None], d[None, :])
        touch = lo <= hi
        wrap = (d[:, None] == L) & (c[None, :] == 0.0)
        return touch | wrap | wrap.T

    def _arc_overlap_matrix(self):
        lo = np.maximum(self.c[:, None], self.c[None, :])
        hi = np.minimum(self.d[:, None], self.d[None, :])
        return hi - lo > 0.0

    def _slab_touch_matrix(self):
        lo = np.maximum(self.a[:, None], self.a[None, :])
        hi = np.minimum(self.b[:, None], self.b[None, :])
        return lo <= hi

    def _slab_overlap_matrix(self):
        lo = np.maximum(self.a[:, None], self.a[None, :])
        hi = np.minimum(self.b[:, None], self.b[None, :])
        return hi - lo > 0.0

    def neighbors_x(self, i: int) -> np.ndarray:
        """Elements sharing positive time overlap and touching arcs (incl. i)."""
        L = self.domain.curve.total_length
        t_ov = (np.minimum(self.b, self.b[i]) - np.maximum(self.a, self.a[i])) > 0.0
        lo = np.maximum(self.c, self.c[i])
        hi = np.minimum(self.d, self.d[i])
        x_touch = lo <= hi
        x_touch |= (self.d == L) & (self.c[i] == 0.0)
        x_touch |= (self.d[i] == L) & (self.c == 0.0)
        return np.nonzero(t_ov & x_touch)[0]

    def neighbors_t(self, i: int) -> np.ndarray:
        """Elements sharing touching slabs and positive arc overlap (incl. i)."""
        t_touch = (np.minimum(self.b, self.b[i]) - np.maximum(self.a, self.a[i])) >= 0.0
        x_ov = (np.minimum(self.d, self.d[i]) - np.maximum(self.c, self.c[i])) > 0.0
        return np.nonzero(t_touch & x_ov)[0]

    def facet_pairs(self):
        """Ordered pairs (i, j) sharing a positive-measure element facet.

        Time facets are horizontal contact lines (b_i = a_j or a_i = b_j with
        arc overlap); space facets are vertical contact lines at equal arc
        endpoints (modulo the closed curve) with slab overlap.  Corner
        contact does not count.
        """
        if self._facet_pairs is not None:
            return self._facet_pairs
        L = self.domain.curve.total_length
        a, b, c, d = self.a, self.b, self.c, self.d
        x_ov = self._arc_overlap_matrix()
        t_ov = self._slab_overlap_matrix()
        t_contact = (b[:, None] == a[None, :]) | (a[:, None] == b[None, :])
        x_contact = (d[:, None] == c[None, :]) | (c[:, None] == d[None, :])
        x_contact |= (d[:, None] == L) & (c[None, :] == 0.0)
        x_contact |= (c[:, None] == 0.0) & (d[None, :] == L)
        share = (t_contact & x_ov) | (x_contact & t_ov)
        np.fill_diagonal(share, False)
        pi, pj = np.nonzero(share)
        self._facet_pairs = (pi, pj)
        return self._facet_pairs

    def arc_keys(self):
        """Unique arcs: (unique (c,d) array, per-element arc index)."""
        if self._arc_key is None:
            cd = np.stack([self.c, self.d], axis=1)
            uniq, inverse = np.unique(cd, axis=0, return_inverse=True)
            self._arc_key = (uniq, inverse.astype(np.int64))
        return self._arc_key


def initial_mesh(domain: Domain, T: float) -> SpaceTimeMesh:
    """Tensor mesh of one time slab and the corner-aligned unit-arc boundary mesh."""
    L = domain.curve.total_length
    n_arcs = int(round(L))
    if not np.allclose(np.diff(np.concatenate([domain.curve.corner_params, [L]])) % 1.0, 0.0):
        raise ValueError("initial mesh requires integer edge lengths")
    cs = np.arange(n_arcs, dtype=float)
    return SpaceTimeMesh(
        domain, T,
        a=np.zeros(n_arcs), b=np.full(n_arcs, float(T)),
        c=cs, d=cs + 1.0,
        lt=np.zeros(n_arcs, dtype=np.int32), lx=np.zeros(n_arcs, dtype=np.int32),
    )


def _apply_splits(mesh: SpaceTimeMesh, add_t, add_x) -> SpaceTimeMesh:
    """Split element i into 2^add_t[i] x 2^add_x[i] equal dyadic children."""
    A, B, C, D, LT, LX, PAR = [], [], [], [], [], [], []
    for i in range(mesh.n):
        nt = 1 << int(add_t[i])
        nx = 1 << int(add_x[i])
        ta = np.linspace(mesh.a[i], mesh.b[i], nt + 1)
        xa = np.linspace(mesh.c[i], mesh.d[i], nx + 1)
        for it in range(nt):
            for ix in range(nx):
                A.append(ta[it]); B.append(ta[it + 1])
                C.append(xa[ix]); D.append(xa[ix + 1])
                LT.append(mesh.lt[i] + add_t[i]); LX.append(mesh.lx[i] + add_x[i])
                PAR.append(i)
    return SpaceTimeMesh(mesh.domain, mesh.T, A, B, C, D, LT, LX, parent_ids=PAR)


def uniform_refine(mesh: SpaceTimeMesh) -> SpaceTimeMesh:
    """Quadrisect every element (one bisection in time and in space)."""
    ones = np.ones(mesh.n, dtype=np.int64)
    return _apply_splits(mesh, ones, ones)


def _close_anisotropic(mesh, add_t, add_x, parabolic=False):
    """Iterate closure until facet-sharing level differences are <= 1.

    With ``parabolic`` also enforce the scaling window
    0.5 * h_x^2 <= h_t <= 2 * h_x^2 elementwise (via the equivalent
    integer-level band since T = 1 and unit initial arcs).
    """
    pi, pj = mesh.facet_pairs()
    lt = mesh.lt.astype(np.int64)
    lx = mesh.lx.astype(np.int64)
    while True:
        plt = lt + add_t
        plx = lx + add_x
        changed = False
        target_t = plt[pj] - 1 - lt[pi]
        mask = target_t > add_t[pi]
        if np.any(mask):
            np.maximum.at(add_t, pi[mask], target_t[mask])
            changed = True
        target_x = plx[pj] - 1 - lx[pi]
        mask = target_x > add_x[pi]
        if np.any(mask):
            np.maximum.at(add_x, pi[mask], target_x[mask])
            changed = True
        if parabolic:
            plt = lt + add_t
            plx = lx + add_x
            over = plt > 2 * plx + 1   # h_t too small relative to h_x^2
            if np.any(over):
                add_x[over] = np.maximum(add_x[over], (plt[over] - 1 + 1) // 2 - lx[over])
                changed = True
            under = plt < 2 * plx - 1  # h_t too large relative to h_x^2
            if np.any(under):
                add_t[under] = np.maximum(add_t[under], 2 * plx[under] - 1 - lt[under])
                changed = True
        if not changed:
            return add_t, add_x


def refine_anisotropic(mesh: SpaceTimeMesh, marked_x, marked_t) -> SpaceTimeMesh:
    """Bisect marked elements directionally, then close level differences.

    Elements only in ``marked_x`` are bisected in space, only in
    ``marked_t`` in time, in both sets quadrisected; afterwards additional
    bisections (in the violated direction only) restore the bound of one on
    space and time level differences across shared edges.
    """
    add_t = np.zeros(mesh.n, dtype=np.int64)
    add_x = np.zeros(mesh.n, dtype=np.int64)
    add_x[list(marked_x)] = 1
    add_t[list(marked_t)] = 1
    add_t, add_x = _close_anisotropic(mesh, add_t, add_x)
    return _apply_splits(mesh, add_t, add_x)


def refine_isotropic(mesh: SpaceTimeMesh, marked) -> SpaceTimeMesh:
    """Quadrisect marked elements, closing to one hanging node per edge.

    For quadrisection-generated meshes the hanging-node rule is equivalent
    to a facet level difference of at most one, with closure elements
    quadrisected as well.
    """
    add = np.zeros(mesh.n, dtype=np.int64)
    add[list(marked)] = 1
    pi, pj = mesh.facet_pairs()
    lt = mesh.lt.astype(np.int64)
    lx = mesh.lx.astype(np.int64)
    while True:
        plt = lt + add
        plx = lx + add
        need = np.maximum(plt[pj] - 1 - lt[pi], plx[pj] - 1 - lx[pi]) - add[pi]
        mask = need > 0
        if not np.any(mask):
            break
        np.maximum.at(add, pi[mask], add[pi[mask]] + need[mask])
    return _apply_splits(mesh, add, add)


def parabolic_window_ok(mesh: SpaceTimeMesh, rtol: float = 1e-12) -> bool:
    ht = mesh.h_t
    hx2 = mesh.h_x**2
    return bool(np.all(ht >= 0.5 * hx2 * (1 - rtol)) and np.all(ht <= 2.0 * hx2 * (1 + rtol)))


def refine_parabolic(mesh: SpaceTimeMesh, marked, mode: str) -> SpaceTimeMesh:
    """Refinement keeping the parabolic scaling h_t ~ h_x^2.

    ``uniform`` bisects every element once in space and as many times in
    time as the window 0.5*h_x^2 <= h_t <= 2*h_x^2 admits (three on the
    initial unit mesh).  ``adaptive`` quadrisects the marked set and then
    adds bisections until both the level-difference bound and the window
    hold everywhere.
    """
    if not parabolic_window_ok(mesh):
        raise ValueError("input mesh violates the parabolic scaling window")
    if mode == "uniform":
        add_x = np.ones(mesh.n, dtype=np.int64)
        add_t = np.zeros(mesh.n, dtype=np.int64)
        for i in range(mesh.n):
            ht = mesh.b[i] - mesh.a[i]
            hx2 = ((mesh.d[i] - mesh.c[i]) / 2.0) ** 2
            k = 0
            while ht / 2.0 >= 0.5 * hx2 * (1 - 1e-12):
                ht /= 2.0
                k += 1
            add_t[i] = k
        return _apply_splits(mesh, add_t, add_x)
    if mode == "adaptive":
        add_t = np.zeros(mesh.n, dtype=np.int64)
        add_x = np.zeros(mesh.n, dtype=np.int64)
        add_t[list(marked)] = 1
        add_x[list(marked)] = 1
        add_t, add_x = _close_anisotropic(mesh, add_t, add_x, parabolic=True)
        out = _apply_splits(mesh, add_t, add_x)
        if not parabolic_window_ok(out):
            raise RuntimeError("parabolic closure failed to restore the window")
        return out
    raise ValueError(f"unknown parabolic mode {mode!r}")


def write_mesh(mesh: SpaceTimeMesh, path) -> None:
    """Dump one element per line: a b c d level_t level_x (17 digits)."""
    with open(path, "w") as fh:
        for i in range(mesh.n):
            fh.write(
                f"{mesh.a[i]:.17g} {mesh.b[i]:.17g} {mesh.c[i]:.17g} "
                f"{mesh.d[i]:.17g} {mesh.lt[i]:d} {mesh.lx[i]:d}\n"
            )


def read_mesh(path, domain: Domain, T: float) -> SpaceTimeMesh:
    data = np.loadtxt(path, ndmin=2)
    return SpaceTimeMesh(
        domain, T,
        a=data[:, 0], b=data[:, 1], c=data[:, 2], d=data[:, 3],
        lt=data[:, 4].astype(np.int32), lx=data[:, 5].astype(np.int32),
    )
