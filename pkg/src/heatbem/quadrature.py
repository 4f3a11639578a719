"""Quadrature rules on [0,1] and Duffy-type transformations.

Three 1D rule families are used throughout:

* plain Gauss-Legendre,
* generalized Gaussian rules for integrands ``f1(x) + f2(x) log(x)``,
* Gauss rules for the endpoint weight ``t^(-1/2)``.

The log-weighted rules are constructed at import time of the requested
order by a damped least-norm Newton iteration on the moment system; if the
iteration does not converge for an order, a geometrically graded composite
Gauss-Legendre rule (ratio 1/4 towards 0) is substituted.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class RuleConstructionError(RuntimeError):
    """Raised when a weighted rule cannot be built for a requested order."""


@dataclass(frozen=True)
class QuadRule:
    """Nodes/weights on (0,1) with a tag identifying the weight function."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str  # "plain" | "log" | "inv_sqrt"

    @property
    def n(self) -> int:
        return self.nodes.size

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadRule:
    """n-point Gauss-Legendre rule on [0,1], exact for degree <= 2n-1."""
    if not 1 <= n <= 64:
        raise ValueError(f"gauss_legendre supports 1 <= n <= 64, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(nodes, weights, "plain")


@lru_cache(maxsize=None)
def gauss_inv_sqrt(n: int) -> QuadRule:
    """n-point rule for ∫_0^1 f(t) t^(-1/2) dt via the substitution t = u^2."""
    if not 1 <= n <= 64:
        raise ValueError(f"gauss_inv_sqrt supports 1 <= n <= 64, got {n}")
    base = gauss_legendre(n)
    nodes = base.nodes**2
    weights = 2.0 * base.weights
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(nodes, weights, "inv_sqrt")


def _newton_log_rule(n: int, dps: int = 40, max_iter: int = 300):
    """Solve the moment system for the n-point log rule in high precision.

    Unknowns are the n nodes and n weights; the system prescribes the
    2*(n//2) moments of {x^k} and {x^k log x} for k < n//2.  Damped
    Gauss-Newton least-norm steps from the Gauss-Legendre initialization.
    """
    import mpmath as mp

    mp.mp.dps = dps
    m = n // 2
    x0, w0 = np.polynomial.legendre.leggauss(n)
    x = [mp.mpf(float(v)) / 2 + mp.mpf("0.5") for v in x0]
    w = [mp.mpf(float(v)) / 2 for v in w0]

    def residual(x, w):
        F = mp.matrix(2 * m, 1)
        for k in range(m):
            F[2 * k] = mp.fsum(w[i] * x[i] ** k for i in range(n)) - mp.mpf(1) / (k + 1)
            F[2 * k + 1] = (
                mp.fsum(w[i] * x[i] ** k * mp.log(x[i]) for i in range(n))
                + mp.mpf(1) / (k + 1) ** 2
            )
        return F

    def jacobian(x, w):
        J = mp.zeros(2 * m, 2 * n)
        for k in range(m):
            for i in range(n):
                lx = mp.log(x[i])
                xk = x[i] ** k
                J[2 * k, i] = xk
                J[2 * k + 1, i] = xk * lx
                if k >= 1:
                    xkm = x[i] ** (k - 1)
                    J[2 * k, n + i] = w[i] * k * xkm
                    J[2 * k + 1, n + i] = w[i] * (k * xkm * lx + xkm)
                else:
                    J[2 * k + 1, n + i] = w[i] / x[i]
        return J

    F = residual(x, w)
    nrm = max(abs(v) for v in F)
    target = mp.mpf(10) ** (-dps + 10)
    for _ in range(max_iter):
        if nrm < target:
            break
        J = jacobian(x, w)
        JT = J.T
        y = mp.lu_solve(J * JT, F)
        d = JT * y
        lam = mp.mpf(1)
        while True:
            xn = [x[i] - lam * d[n + i] for i in range(n)]
            wn = [w[i] - lam * d[i] for i in range(n)]
            ok = all(mp.mpf(0) < v < mp.mpf(1) for v in xn) and all(v > 0 for v in wn)
            if ok:
                Fn = residual(xn, wn)
                nn = max(abs(v) for v in Fn)
                if nn < nrm:
                    x, w, F, nrm = xn, wn, Fn, nn
                    break
            lam /= 2
            if lam < mp.mpf(2) ** -60:
                raise RuleConstructionError(f"log-rule Newton stalled for n={n}")
    else:
        raise RuleConstructionError(f"log-rule Newton did not converge for n={n}")
    nodes = np.array([float(v) for v in x])
    weights = np.array([float(v) for v in w])
    order = np.argsort(nodes)
    return nodes[order], weights[order]


def _composite_log_rule(n: int):
    """Graded composite Gauss-Legendre fallback for log-singular integrands.

    Panels [4^-(j+1), 4^-j]; the innermost panel is handled by a scaled
    low-order log rule (exact under scaling since log(s*u) = log s + log u),
    which keeps all nodes far above machine epsilon.
    """
    q = max(12, n // 2 + 4)
    base = gauss_legendre(q)
    depth = 12
    nodes, weights = [], []
    hi = 1.0
    for _ in range(depth):
        lo = hi / 4.0
        nodes.append(lo + (hi - lo) * base.nodes)
        weights.append((hi - lo) * base.weights)
        hi = lo
    inner = gauss_log(8)
    nodes.append(hi * inner.nodes)
    weights.append(hi * inner.weights)
    nodes = np.concatenate(nodes[::-1])
    weights = np.concatenate(weights[::-1])
    return nodes, weights


@lru_cache(maxsize=None)
def gauss_log(n: int) -> QuadRule:
    """n-point rule exact for {x^k} and {x^k log x}, k < n//2, on [0,1]."""
    if not 2 <= n <= 32:
        raise ValueError(f"gauss_log supports 2 <= n <= 32, got {n}")
    if n <= 20:
        try:
            nodes, weights = _newton_log_rule(n)
        except RuleConstructionError:
            nodes, weights = _composite_log_rule(n)
    else:
        # the damped Newton iteration stalls beyond n = 20; use the graded
        # composite directly rather than burning iterations first
        nodes, weights = _composite_log_rule(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(nodes, weights, "log")


def map_rule(rule: QuadRule, a: float, b: float):
    """Affine image of a plain rule on [a,b] (weight tags do not transport)."""
    return a + (b - a) * rule.nodes, (b - a) * rule.weights


def duffy_square_nodes(rule_x: QuadRule, rule_y: QuadRule):
    """Nodes/weights of the two-triangle Duffy split of the unit square.

    The square is covered by the images of (x, x*(1-y)) and (x*(1-y), x),
    with Jacobian x, so that a singularity along the diagonal u = v appears
    as |u - v| = x*y: weighted rules in x and y see it at their origin.

    Returns (u, v, w) flat arrays covering both triangles.
    """
    x = rule_x.nodes[:, None]
    y = rule_y.nodes[None, :]
    w = (rule_x.weights[:, None] * rule_y.weights[None, :]) * x
    u1, v1 = np.broadcast_arrays(x, x * (1.0 - y))
    u = np.concatenate([u1.ravel(), v1.ravel()])
    v = np.concatenate([v1.ravel(), u1.ravel()])
    return u, v, np.concatenate([w.ravel(), w.ravel()])


def duffy_square(f, rule_x: QuadRule | None = None, rule_y: QuadRule | None = None) -> float:
    """Integrate f over [0,1]^2 with the diagonal-singularity Duffy split.

    ``f`` must accept broadcast arrays.  Pass log rules when f carries a
    log|u - v| singularity; plain rules reproduce tensor Gauss values for
    smooth integrands.
    """
    rule_x = rule_x or gauss_log(16)
    rule_y = rule_y or gauss_log(16)
    u, v, w = duffy_square_nodes(rule_x, rule_y)
    return float(np.dot(w, f(u, v)))


_TETRA_MAPS = (
    lambda x, y, z: (x, x * (1.0 - y), x * y * z),
    lambda x, y, z: (x * (1.0 - y), x * (1.0 - y * z), x * y * z),
    lambda x, y, z: (x * (1.0 - y + y * z), x * (1.0 - y), x * y),
)


def duffy_prism_nodes(rule_x: QuadRule, rule_y: QuadRule, rule_z: QuadRule):
    """Nodes/weights of the three-tetrahedron Duffy split of [0,1] x T-hat.

    The reference prism (first coordinate in [0,1], last two in the unit
    triangle z <= 1 - y) is the union of the images of the three cube maps;
    each has Jacobian x^2 * y.  Returns (p, q, r, w) flat arrays.
    """
    x = rule_x.nodes[:, None, None]
    y = rule_y.nodes[None, :, None]
    z = rule_z.nodes[None, None, :]
    w = (
        rule_x.weights[:, None, None]
        * rule_y.weights[None, :, None]
        * rule_z.weights[None, None, :]
        * x * x * y
    )
    ps, qs, rs, ws = [], [], [], []
    for tmap in _TETRA_MAPS:
        p, q, r = np.broadcast_arrays(*tmap(x, y, z))
        ps.append(p.ravel())
        qs.append(q.ravel())
        rs.append(r.ravel())
        ws.append(np.broadcast_to(w, p.shape).ravel())
    return (np.concatenate(ps), np.concatenate(qs), np.concatenate(rs), np.concatenate(ws))


def duffy_prism(f, rule_x: QuadRule | None = None, rule_y: QuadRule | None = None,
                rule_z: QuadRule | None = None) -> float:
    """Integrate f(x, y, z) over [0,1] x T-hat via the tetrahedral Duffy maps.

    Designed for integrands with a log singularity along (x, z) = (y, 0) or
    at the corner: weighted rules in x and y, plain in z.
    """
    rule_x = rule_x or gauss_log(16)
    rule_y = rule_y or gauss_log(16)
    rule_z = rule_z or gauss_legendre(12)
    p, q, r, w = duffy_prism_nodes(rule_x, rule_y, rule_z)
    return float(np.dot(w, f(p, q, r)))


def triangle_rule(n: int):
    """Tensor rule collapsed onto the unit triangle z <= 1 - y.

    Returns (y, z, w) with sum(w) = 1/2; exactness follows from the
    underlying n-point Gauss-Legendre factors.
    """
    base = gauss_legendre(n)
    y = base.nodes[:, None]
    z = (1.0 - y) * base.nodes[None, :]
    w = (base.weights[:, None] * base.weights[None, :]) * (1.0 - y)
    yy = np.broadcast_to(y, w.shape)
    return yy.ravel().copy(), z.ravel().copy(), w.ravel().copy()


def geometric_panels(lo: float, hi: float, ratio: float = 2.0):
    """Panel breakpoints lo = p0 < p1 < ... < pk = hi growing geometrically."""
    if not 0.0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    pts = [lo]
    while pts[-1] * ratio < hi:
        pts.append(pts[-1] * ratio)
    pts.append(hi)
    return np.array(pts)
