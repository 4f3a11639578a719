"""Volume integrals of g_tau against the initial datum over triangulations.

The initial-operator part of the right-hand side needs, per boundary arc K
and per triangle T of the anchored triangulation,

    I_T(tau) = int_0^1 int_That  g_tau(|gamma_K(x) - gamma_T(y,z)|^2)
               * u0(gamma_T(y,z)) |det D gamma_T|  dy dz dx.

Three geometric cases (T contains K as an edge, T touches K at one vertex,
T disjoint from K) with the tetrahedral Duffy treatment for the singular
ones.  For lags whose diffusion layer is much thinner than the arc the
anchored case switches to a band decomposition around the shared edge,
since the fixed-order Duffy rule cannot resolve the layer; separations are
always formed with the Duffy radial factor pulled out analytically.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernel
from ._segints import CUT, QuadConfig, _pow2_at_least, _radial_nodes, _bucket_by_sigma
from .geometry import CurvilinearTriangle
from .quadrature import gauss_legendre, gauss_log, triangle_rule


def _u0_tilde(u0, tri: CurvilinearTriangle, y, z):
    pts = tri.map(y, z)
    return u0(pts[..., 0], pts[..., 1]) * abs(tri.jacobian)


def volume_disjoint(tau, u0_fn, arc_p0, arc_e, ell, tri: CurvilinearTriangle,
                    qc: QuadConfig) -> np.ndarray:
    """Plain tensor quadrature for a triangle away from the arc."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape)
    y, z, wt = triangle_rule(qc.n_plain)
    pts = tri.map(y, z)
    gl = gauss_legendre(qc.n_plain)
    xs = arc_p0[None, :] + (gl.nodes * ell)[:, None] * arc_e[None, :]
    diff = xs[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    d2min = float(np.min(d2))
    live = (tau > 0.0) & (d2min < CUT * 4.0 * tau)
    if not np.any(live):
        return out
    u0v = _u0_tilde(u0_fn, tri, y, z)
    wgt = (gl.weights[:, None] * (wt * u0v)[None, :]).ravel()
    vals = kernel.frak_g_nd(tau[live][None, :], d2.ravel()[:, None])
    out[live] = wgt @ vals
    return out


def volume_vertex_touch(tau, d_K, tri_A, tri_B, tri_C, u0_fn, qc: QuadConfig,
                        ) -> np.ndarray:
    """Triangle touching the arc at gamma_K(0) = tri_A.

    d_K is the arc chord vector (length = arc length), pointing away from
    the touch point.  Tetrahedral Duffy maps with the radial factor x
    extracted analytically: the separation is x * |bracket(y, z)| with the
    bracket bounded away from zero because the arc leaves the triangle.
    """
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape)
    pos = tau > 0.0
    if not np.any(pos):
        return out
    t = tau[pos]
    eb = tri_B - tri_A
    ec = tri_C - tri_A
    glz = gauss_legendre(qc.n_plain)
    ypart = gauss_legendre(qc.n_plain)
    y = ypart.nodes[:, None]
    z = glz.nodes[None, :]
    wyz = ypart.weights[:, None] * glz.weights[None, :]
    res = np.zeros(t.shape)
    # image coordinates (p, q, r) = tetra_i(x, y, z); separation vector
    # d_K*p - eb*q - ec*r = x * bracket_i(y, z)
    maps = (
        (lambda y, z: (np.ones_like(y * z), (1.0 - y) + 0 * z, y * z)),
        (lambda y, z: ((1.0 - y) + 0 * z, 1.0 - y * z, y * z)),
        (lambda y, z: (1.0 - y + y * z, (1.0 - y) + 0 * z, y + 0 * z)),
    )
    for tmap in maps:
        gp, gq, gr = tmap(y, z)
        brx = d_K[0] * gp - eb[0] * gq - ec[0] * gr
        bry = d_K[1] * gp - eb[1] * gq - ec[1] * gr
        msq = (brx**2 + bry**2).ravel()
        # radial layer scale set by the smallest separation direction
        scale = math.sqrt(float(np.min(msq)))
        for sig, idx in _bucket_by_sigma(t, scale).items():
            x, wx = _radial_nodes(sig, qc.n_log, qc.panel_q)
            jac = wx * x * x  # tetra jacobian x^2 * y, y-factor joins wyz
            d2 = (x[:, None] ** 2) * msq[None, :]
            pq = x[:, None, None] * gq[None, :, :]
            pr = x[:, None, None] * gr[None, :, :]
            pts_y = pq.reshape(x.size, -1)
            pts_z = pr.reshape(x.size, -1)
            u0v = u0_fn(
                tri_A[0] + eb[0] * pts_y + ec[0] * pts_z,
                tri_A[1] + eb[1] * pts_y + ec[1] * pts_z,
            )
            wy_full = (wyz * y).ravel()[None, :] * u0v
            vals = kernel.frak_g_nd(t[idx][None, None, :], d2[:, :, None])
            res[idx] += np.einsum("i,ij,ijk->k", jac, wy_full, vals)
    det = abs(eb[0] * ec[1] - eb[1] * ec[0])
    out[pos] = res * det
    return out


def volume_anchor(tau, tri_A, tri_B, tri_C, u0_fn, qc: QuadConfig) -> np.ndarray:
    """Triangle having the arc as its (y, 0) edge: A, B are the arc endpoints.

    Benign lags: tetrahedral Duffy with log rules in x and y.  Thin layers:
    band decomposition in (u, z) with u = x - y, integrating the smooth
    datum along the band direction first.
    """
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape)
    pos = tau > 0.0
    if not np.any(pos):
        return out
    t = tau[pos]
    eb = tri_B - tri_A
    ec = tri_C - tri_A
    det = abs(eb[0] * ec[1] - eb[1] * ec[0])
    ellK = float(np.linalg.norm(eb))
    res = np.zeros(t.shape)
    for sig, idx in _bucket_by_sigma(t, ellK).items():
        tb = t[idx]
        if sig >= 1.0:
            res[idx] = _anchor_duffy(tb, eb, ec, tri_A, u0_fn, qc)
        else:
            res[idx] = _anchor_band(tb, eb, ec, tri_A, u0_fn, qc)
    out[pos] = res * det
    return out


def _anchor_duffy(t, eb, ec, A, u0_fn, qc) -> np.ndarray:
    lg = gauss_log(qc.n_log)
    glz = gauss_legendre(qc.n_plain)
    x = lg.nodes[:, None, None]
    y = lg.nodes[None, :, None]
    z = glz.nodes[None, None, :]
    w3 = (lg.weights[:, None, None] * lg.weights[None, :, None]
          * glz.weights[None, None, :])
    res = np.zeros(t.shape)
    # (p - q, r) per tetra map equals x*y*(v1(z), v2(z))
    brackets = (
        (np.ones_like(z), z),
        (z - 1.0, z),
        (z, np.ones_like(z)),
    )
    images = (
        (x * (1.0 - y), x * y * z),
        (x * (1.0 - y * z), x * y * z),
        (x * (1.0 - y), x * y),
    )
    for (v1, v2), (q_im, r_im) in zip(brackets, images):
        sepx = eb[0] * v1 - ec[0] * v2
        sepy = eb[1] * v1 - ec[1] * v2
        msq = sepx**2 + sepy**2  # shape (1,1,nz)
        d2 = ((x * y) ** 2 * msq).ravel()
        q_b, r_b = np.broadcast_arrays(q_im, r_im)
        u0v = u0_fn(A[0] + eb[0] * q_b + ec[0] * r_b,
                    A[1] + eb[1] * q_b + ec[1] * r_b)
        wgt = (w3 * x * x * y * u0v).ravel()
        vals = kernel.frak_g_nd(t[None, :], d2[:, None])
        res += wgt @ vals
    return res


def _anchor_band(t, eb, ec, A, u0_fn, qc) -> np.ndarray:
    """Layered anchored integral in coordinates (u, z, m), u = x - y.

    Completing the square in dist^2 = |u eb - z ec|^2 gives the exact
    separation ell^2 (u - u*(z))^2 + hperp^2 z^2 with u*(z) = z beta/ell^2,
    so both directions are graded about the true singularity/spike.  The
    datum is integrated along the band direction m (constant dist) first.
    """
    ellK = float(np.linalg.norm(eb))
    gamma2 = float(np.dot(ec, ec))
    beta = float(np.dot(eb, ec))
    hperp2 = gamma2 - beta**2 / ellK**2  # squared height of C over the K line
    hperp = math.sqrt(hperp2)
    tmax = float(np.max(t))
    w_layer = 2.0 * math.sqrt(tmax) / ellK
    glm = gauss_legendre(qc.panel_q)
    # z grid: log sliver + graded panels towards z = 0, where the integrated
    # x-profile behaves like A(z) + B(z) log z under the diffusion cutoff
    sig_z = min(1.0, _pow2_at_least(max(2.0 * math.sqrt(tmax) / hperp, 1e-12)))
    zn, zw = _radial_nodes(sig_z, qc.n_log, qc.panel_q)
    res = np.zeros(t.shape)
    for zi, zwi in zip(zn, zw):
        ustar = zi * beta / ellK**2
        spike = max(w_layer, zi * hperp / ellK)
        lo_dom, hi_dom = -(1.0 - zi), 1.0
        sides = []
        for dom_len in (hi_dom - ustar, ustar - lo_dom):
            if dom_len <= 0.0:
                sides.append((np.empty(0), np.empty(0)))
                continue
            sig = min(1.0, _pow2_at_least(spike / dom_len))
            un, uw = _radial_nodes(sig, qc.n_log, qc.panel_q)
            sides.append((un * dom_len, uw * dom_len))
        du = np.concatenate([-sides[1][0][::-1], sides[0][0]])
        w_all = np.concatenate([sides[1][1][::-1], sides[0][1]])
        d2 = (ellK * du) ** 2 + hperp2 * zi * zi
        alive = d2 < CUT * 4.0 * tmax
        if not np.any(alive):
            continue
        u_all = (du + ustar)[alive]
        w_all, d2 = w_all[alive], d2[alive]
        # band-direction integral of the datum: y in [max(0,-u), min(1-z, 1-u)]
        ylo = np.maximum(0.0, -u_all)
        yhi = np.minimum(1.0 - zi, 1.0 - u_all)
        ylen = np.maximum(yhi - ylo, 0.0)
        ym = ylo[:, None] + ylen[:, None] * glm.nodes[None, :]
        px = A[0] + eb[0] * ym + ec[0] * zi
        py = A[1] + eb[1] * ym + ec[1] * zi
        uim = (u0_fn(px, py) @ glm.weights) * ylen
        vals = kernel.frak_g_nd(t[None, :], d2[:, None])
        res += ((w_all * uim * zwi) @ vals)
    return res
