"""Singular and layer-aware quadratures for kernel integrals on flat arcs.

Every integral needed by assembly and residual evaluation reduces to one of

* the 1D segment integral  int_0^ell g_tau((u - s0)^2 + dp^2) du,
* the 2D arc-pair integral int_K int_K' G_tau(|x - y|^2) dy dx,

where g/G are the one- and two-fold time antiderivatives of the heat
kernel.  Their integrands combine a logarithmic singularity at coinciding
points with an exp(-d^2/4 tau) diffusion layer of width ~ 2 sqrt(tau).  The
composites below put a scaled log rule on [0, sigma] (exact for
f1 + f2 log under scaling) and geometric Gauss panels across the decay
region, with sigma a power of two quantization of the layer width so node
sets are shared across batches of tau.

All comparisons of arc parameters are exact: mesh coordinates are dyadic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernel
from .quadrature import gauss_legendre, gauss_log

CUT = 745.0  # exp(-CUT) underflows; beyond it every kernel value is 0.0
_COLLINEAR_TOL = 1e-9


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature orders used across assembly, residual, and estimator."""

    n_plain: int = 12
    n_log: int = 16
    n_invsqrt: int = 12
    near_bump: int = 8   # extra plain order for close-but-disjoint arc pairs
    panel_q: int = 12    # Gauss order per geometric layer panel

    def plain(self):
        return gauss_legendre(self.n_plain)

    def log(self):
        return gauss_log(self.n_log)

    def inv_sqrt(self):
        from .quadrature import gauss_inv_sqrt

        return gauss_inv_sqrt(self.n_invsqrt)


def _pow2_at_least(x: float) -> float:
    return 2.0 ** math.ceil(math.log2(x))


def sigma_of_width(w: float) -> float:
    """Power-of-two layer parameter for normalized layer width w."""
    if w >= 4.0:
        return 1.0
    return min(1.0, _pow2_at_least(w / 4.0))


@lru_cache(maxsize=None)
def _radial_nodes(sigma: float, n_log: int, panel_q: int):
    """Composite nodes on [0, min(1, 64 sigma)] for log-singular layered
    integrands.

    The log rule is confined to a sliver [0, sigma/256] whose mass fraction
    makes its limited polynomial exactness irrelevant; ratio-2 Gauss panels
    (on which log u is smooth) carry the rest up to 64 sigma, past which
    exp(-(u/w)^2) <= exp(-256).
    """
    lg = gauss_log(n_log)
    gl = gauss_legendre(panel_q)
    sliver = sigma / 256.0
    nodes = [sliver * lg.nodes]
    weights = [sliver * lg.weights]
    lo = sliver
    hi_cap = min(1.0, 64.0 * sigma)
    while lo < hi_cap:
        hi = min(2.0 * lo, hi_cap)
        nodes.append(lo + (hi - lo) * gl.nodes)
        weights.append((hi - lo) * gl.weights)
        lo = hi
    return np.concatenate(nodes), np.concatenate(weights)


@lru_cache(maxsize=None)
def _graded_nodes_01(wq: float, panel_q: int):
    """Panels of [0, 1] graded towards 0 for a smooth layer of width wq.

    Innermost panel [0, wq], then ratio-2 panels, truncated at 64 wq (the
    integrand there is below exp(-256) of its peak).
    """
    gl = gauss_legendre(panel_q)
    cap = min(1.0, 64.0 * wq)
    nodes = [wq * gl.nodes]
    weights = [wq * gl.weights]
    lo = wq
    while lo < cap:
        hi = min(2.0 * lo, cap)
        nodes.append(lo + (hi - lo) * gl.nodes)
        weights.append((hi - lo) * gl.weights)
        lo = hi
    return np.concatenate(nodes), np.concatenate(weights)


def _bucket_by_sigma(tau: np.ndarray, scale: float):
    """Group positive tau values by the quantized layer parameter."""
    w = 2.0 * np.sqrt(tau) / scale
    sig = np.where(w >= 4.0, 1.0, 2.0 ** np.ceil(np.log2(np.maximum(w, 1e-290) / 4.0)))
    sig = np.minimum(sig, 1.0)
    buckets = {}
    for i, s in enumerate(sig):
        buckets.setdefault(float(s), []).append(i)
    return buckets


# ---------------------------------------------------------------------------
# 1D segment integrals of frak_g
# ---------------------------------------------------------------------------


def _seg_g_endpoint(tau: np.ndarray, m: float, qc: QuadConfig) -> np.ndarray:
    """int_0^m g_tau(u^2) du for a batch of tau > 0 (singular at u = 0)."""
    out = np.zeros(tau.shape)
    if m <= 0.0:
        return out
    for sig, idx in _bucket_by_sigma(tau, m).items():
        u, w = _radial_nodes(sig, qc.n_log, qc.panel_q)
        uu = m * u
        vals = kernel.frak_g_nd(tau[idx][None, :], (uu**2)[:, None])
        out[idx] = m * (w @ vals)
    return out


def seg_g_batch(tau, ell: float, s0: float, dp: float, qc: QuadConfig) -> np.ndarray:
    """int_0^ell g_tau((u - s0)^2 + dp^2) du for a batch of time lags.

    (s0, dp) are the coordinates of the evaluation point in the segment
    frame (along, perpendicular).  Handles the on-segment logarithmic
    singularity by splitting at s0 and the diffusion layer by graded panels
    around the nearest point.
    """
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape)
    pos = tau > 0.0
    if not np.any(pos):
        return out
    ustar = min(max(s0, 0.0), ell)
    dmin2 = (ustar - s0) ** 2 + dp * dp
    live = pos & (dmin2 < CUT * 4.0 * tau)
    if not np.any(live):
        return out
    t_live = tau[live]

    if abs(dp) <= _COLLINEAR_TOL:
        if -_COLLINEAR_TOL <= s0 <= ell + _COLLINEAR_TOL:
            left = min(max(s0, 0.0), ell)
            res = _seg_g_endpoint(t_live, left, qc) + _seg_g_endpoint(t_live, ell - left, qc)
            out[live] = res
            return out
        # collinear but outside the segment: smooth, graded towards near end
        gap = -s0 if s0 < 0 else s0 - ell
        res = _seg_g_offset_line(t_live, ell, gap, qc)
        out[live] = res
        return out

    out[live] = _seg_g_offaxis(t_live, ell, s0, dp, qc)
    return out


def _seg_g_offset_line(tau: np.ndarray, ell: float, gap: float, qc: QuadConfig) -> np.ndarray:
    """int_0^ell g_tau((u + gap)^2) du, gap > 0 (collinear, disjoint)."""
    out = np.zeros(tau.shape)
    for sig, idx in _bucket_by_sigma(tau, ell).items():
        wq = max(sig / 4.0, 2.0 * math.sqrt(float(np.max(tau[idx]))) / ell / 4.0)
        u, w = _graded_nodes_01(min(1.0, _pow2_at_least(wq)), qc.panel_q)
        uu = ell * u
        vals = kernel.frak_g_nd(tau[idx][None, :], ((uu + gap) ** 2)[:, None])
        out[idx] = ell * (w @ vals)
    return out


def _seg_g_offaxis(tau: np.ndarray, ell: float, s0: float, dp: float,
                   qc: QuadConfig) -> np.ndarray:
    """Off-line evaluation point: smooth integrand, near-log spike of width
    ~ dp at u = s0 under a diffusion layer; panels graded to both scales."""
    out = np.zeros(tau.shape)
    ustar = min(max(s0, 0.0), ell)
    spike = max(abs(dp) / ell, 1e-12)
    for sig, idx in _bucket_by_sigma(tau, ell).items():
        gl = gauss_legendre(qc.panel_q)
        h0 = min(1.0, _pow2_at_least(max(min(sig / 4.0, spike), spike / 4.0)))
        cuts = _cuts_about(ustar / ell, h0)
        nodes, weights = [], []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            nodes.append(lo + (hi - lo) * gl.nodes)
            weights.append((hi - lo) * gl.weights)
        u = ell * np.concatenate(nodes)
        w = ell * np.concatenate(weights)
        d2 = (u - s0) ** 2 + dp * dp
        vals = kernel.frak_g_nd(tau[idx][None, :], d2[:, None])
        out[idx] = w @ vals
    return out


@lru_cache(maxsize=None)
def _cuts_about(frac: float, h0: float):
    """Panel cuts of [0,1] refined geometrically towards the point frac."""
    frac = min(max(frac, 0.0), 1.0)
    cuts = {0.0, 1.0, frac}
    d = h0
    while d < 1.0:
        if frac - d > 0.0:
            cuts.add(frac - d)
        if frac + d < 1.0:
            cuts.add(frac + d)
        d *= 2.0
    return tuple(sorted(cuts))


# ---------------------------------------------------------------------------
# 2D arc-pair integrals of frak_G
# ---------------------------------------------------------------------------


def pair_G_equal(tau, ell: float, qc: QuadConfig, force_duffy: bool = False) -> np.ndarray:
    """int_K int_K G_tau(|x - y|^2) over an arc of length ell against itself.

    Benign lags use the two-triangle Duffy split with log rules in both
    directions (the separation |x - y| = ell * x * y is formed analytically).
    For lags with a layer much thinner than the arc the double integral is
    collapsed to 1D (the integrand depends on x - y only) and handled by
    the layered composite, which the fixed-order Duffy rule cannot resolve.
    """
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape)
    pos = tau > 0.0
    if not np.any(pos):
        return out
    t = tau[pos]
    res = np.zeros(t.shape)
    for sig, idx in _bucket_by_sigma(t, ell).items():
        tb = t[idx]
        if sig >= 1.0 or force_duffy:
            lg = gauss_log(qc.n_log)
            x = lg.nodes[:, None]
            y = lg.nodes[None, :]
            wgt = (lg.weights[:, None] * lg.weights[None, :]) * x
            sep2 = ((ell * x * y) ** 2).ravel()
            vals = kernel.frak_G_nd(tb[None, :], sep2[:, None])
            res[idx] = 2.0 * ell * ell * (wgt.ravel() @ vals)
        else:
            u, w = _radial_nodes(sig, qc.n_log, qc.panel_q)
            vals = kernel.frak_G_nd(tb[None, :], ((ell * u) ** 2)[:, None])
            res[idx] = 2.0 * ell * ell * ((w * (1.0 - u)) @ vals)
    out[pos] = res
    return out


def _pair_G_touch_collinear(tau: np.ndarray, ellx: float, elly: float,
                            qc: QuadConfig) -> np.ndarray:
    """Touching arcs on one line: |x - y| = u ellx + v elly collapses the
    double integral to int_0^(lx+ly) G(p^2) rho(p) dp with the trapezoidal
    overlap density rho(p) = min(p, lx, ly, lx+ly-p)."""
    lo, hi = sorted((ellx, elly))
    S = ellx + elly
    out = np.zeros(tau.shape)
    lg = gauss_log(qc.n_log)
    gl = gauss_legendre(qc.panel_q)
    for sig, idx in _bucket_by_sigma(tau, S).items():
        m = min(sig, lo / S)  # log panel must not straddle the density kink
        nodes = [m * lg.nodes]
        weights = [m * lg.weights]
        cap = min(1.0, 64.0 * sig)
        cuts = {m, cap}
        d = m
        while d < cap:
            d *= 2.0
            if d < cap:
                cuts.add(d)
        for brk in (lo / S, hi / S):
            if m < brk < cap:
                cuts.add(brk)
        cuts = sorted(cuts)
        for p_lo, p_hi in zip(cuts[:-1], cuts[1:]):
            nodes.append(p_lo + (p_hi - p_lo) * gl.nodes)
            weights.append((p_hi - p_lo) * gl.weights)
        u = np.concatenate(nodes)
        w = np.concatenate(weights)
        p = S * u
        rho = np.minimum(np.minimum(p, lo), S - p)
        vals = kernel.frak_G_nd(tau[idx][None, :], (p**2)[:, None])
        out[idx] = S * ((w * rho) @ vals)
    return out


def pair_G_touch(tau, ellx: float, elly: float, cosang: float, qc: QuadConfig) -> np.ndarray:
    """Arc pair touching at one point, both parametrized away from it.

    |x(u) - y(v)|^2 = (u ellx)^2 - 2 u v ellx elly cosang + (v elly)^2.
    Duffy pieces (u,v) = (x, x y) and (x y, x) give radial log structure;
    the radial direction carries the layered composite when needed.
    Collinear contact reduces to a 1D density integral instead.
    """
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape)
    pos = tau > 0.0
    if not np.any(pos):
        return out
    t = tau[pos]
    if cosang < -1.0 + 1e-12:
        out[pos] = _pair_G_touch_collinear(t, ellx, elly, qc)
        return out
    res = np.zeros(t.shape)
    gly = gauss_legendre(qc.n_plain)
    y = gly.nodes
    wy = gly.weights
    # squared direction factors of the two Duffy pieces
    m1 = ellx**2 - 2.0 * y * ellx * elly * cosang + (y * elly) ** 2
    m2 = (y * ellx) ** 2 - 2.0 * y * ellx * elly * cosang + elly**2
    for piece_m, scale in ((m1, ellx), (m2, max(ellx, elly))):
        for sig, idx in _bucket_by_sigma(t, scale).items():
            tb = t[idx]
            x, wx = _radial_nodes(sig, qc.n_log, qc.panel_q)
            sep2 = (x[:, None] ** 2) * piece_m[None, :]
            vals = kernel.frak_G_nd(tb[None, None, :], sep2[:, :, None])
            contracted = np.einsum("i,j,ijk->k", wx * x, wy, vals)
            res[idx] += ellx * elly * contracted
    out[pos] = res
    return out


def _segment_closest_params(p0, e0, l0, p1, e1, l1):
    """Parameters (u*, v*) in [0,1]^2 of the closest points of two segments."""
    best = (np.inf, 0.0, 0.0)
    for u in np.linspace(0.0, 1.0, 17):
        a = p0 + u * l0 * e0
        t = np.dot(a - p1, e1)
        v = min(max(t / l1, 0.0), 1.0)
        b = p1 + v * l1 * e1
        d2 = float(np.dot(a - b, a - b))
        if d2 < best[0]:
            best = (d2, u, v)
    for v in np.linspace(0.0, 1.0, 17):
        b = p1 + v * l1 * e1
        t = np.dot(b - p0, e0)
        u = min(max(t / l0, 0.0), 1.0)
        a = p0 + u * l0 * e0
        d2 = float(np.dot(a - b, a - b))
        if d2 < best[0]:
            best = (d2, u, v)
    return best


def pair_G_disjoint(tau, p0, e0, l0, p1, e1, l1, qc: QuadConfig) -> np.ndarray:
    """Disjoint arc pair: tensor Gauss, graded towards the closest points
    when the diffusion layer or the gap is small relative to the arcs."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape)
    d2min, ustar, vstar = _segment_closest_params(p0, e0, l0, p1, e1, l1)
    live = (tau > 0.0) & (d2min < CUT * 4.0 * tau)
    if not np.any(live):
        return out
    t = tau[live]
    dist = math.sqrt(d2min)
    near = dist < 0.3 * max(l0, l1)
    res = np.zeros(t.shape)
    for sig, idx in _bucket_by_sigma(t, max(l0, l1)).items():
        tb = t[idx]
        if sig >= 1.0 and not near:
            n = qc.n_plain
            gl = gauss_legendre(n)
            un, uw = gl.nodes, gl.weights
            vn, vw = un, uw
        elif sig >= 1.0:
            n = qc.n_plain + qc.near_bump
            gl = gauss_legendre(n)
            un, uw = gl.nodes, gl.weights
            vn, vw = un, uw
        else:
            gl = gauss_legendre(qc.panel_q)
            un, uw = _panels_from_cuts(_cuts_about(ustar, sig), gl)
            vn, vw = _panels_from_cuts(_cuts_about(vstar, sig), gl)
        pa = p0[None, :] + (un * l0)[:, None] * e0[None, :]
        pb = p1[None, :] + (vn * l1)[:, None] * e1[None, :]
        diff = pa[:, None, :] - pb[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff).ravel()
        vals = kernel.frak_G_nd(tb[None, :], d2[:, None])
        wgt = (uw[:, None] * vw[None, :]).ravel() * (l0 * l1)
        res[idx] = wgt @ vals
    out[live] = res
    return out


def _panels_from_cuts(cuts, gl):
    nodes, weights = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        nodes.append(lo + (hi - lo) * gl.nodes)
        weights.append((hi - lo) * gl.weights)
    return np.concatenate(nodes), np.concatenate(weights)
