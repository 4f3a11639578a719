"""Heat kernel for n = 2 and its exponential-integral time antiderivatives.

The fundamental solution G of the heat equation vanishes identically for
non-positive time differences (causality).  Integrating G once respectively
twice in time leads to the functions ``frak_g`` and ``frak_G`` below, which
are combinations of exponentials and the exponential integral Ei.  Both
inherit the causal cutoff and have a logarithmic singularity at coinciding
spatial points.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expi as _scipy_expi

EULER_GAMMA = 0.57721566490153286060651209008240243
FOUR_PI = 4.0 * math.pi

# exp(-z) underflows to 0.0 in double precision beyond this point, so every
# Ei-containing expression is an exact floating-point zero.
ARG_CUTOFF = 745.0

_SERIES_CF_SWITCH = 6.0


def expint_ei(x: float) -> float:
    """Exponential integral Ei(x) for negative arguments.

    Power series (accumulated in extended precision to absorb the
    alternating-series cancellation) for |x| <= 6, modified-Lentz continued
    fraction for the equivalent E1(-x) beyond.  Accurate to at least 13
    significant digits on the whole negative axis.
    """
    if x >= 0.0:
        raise ValueError(f"expint_ei requires x < 0, got {x}")
    z = -x
    if z <= _SERIES_CF_SWITCH:
        xl = np.longdouble(x)
        term = np.longdouble(1.0)
        acc = np.longdouble(0.0)
        for k in range(1, 200):
            term *= xl / k
            add = term / k
            acc += add
            if abs(add) <= 1e-26 * abs(acc) + np.longdouble(1e-4950):
                break
        return float(np.longdouble(EULER_GAMMA) + np.log(np.longdouble(z)) + acc)
    if z > ARG_CUTOFF:
        return 0.0
    # E1(z) = exp(-z) / (z + 1 - 1/(z + 3 - 4/(z + 5 - 9/(...)))), Ei(x) = -E1(z)
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 300):
        a = -float(i) * float(i)
        b += 2.0
        d = 1.0 / (b + a * d)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return -math.exp(-z) * h


def ei_neg(z):
    """Vectorized Ei(-z) for arrays z > 0, with underflow cutoff to exact 0."""
    z = np.asarray(z, dtype=float)
    out = np.zeros(z.shape)
    live = z < ARG_CUTOFF
    if np.any(live):
        out[live] = _scipy_expi(-z[live])
    return out


def heat_G(t: float, x) -> float:
    """Heat kernel G(t, x) in two space dimensions; exactly 0 for t <= 0."""
    if t <= 0.0:
        return 0.0
    x = np.asarray(x, dtype=float)
    r2 = float(x[0] * x[0] + x[1] * x[1])
    z = r2 / (4.0 * t)
    if z > ARG_CUTOFF:
        return 0.0
    return math.exp(-z) / (FOUR_PI * t)


def heat_G_r2(t, r2):
    """Vectorized heat kernel over broadcastable (t, squared distance)."""
    t = np.asarray(t, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    shape = np.broadcast(t, r2).shape
    out = np.zeros(shape)
    pos = np.broadcast_to(t > 0.0, shape)
    z = np.empty(shape)
    np.divide(r2, 4.0 * t, out=z, where=pos)
    live = pos & (z < ARG_CUTOFF)
    tt = np.broadcast_to(t, shape)
    out[live] = np.exp(-z[live]) / (FOUR_PI * tt[live])
    return out


def frak_g(t: float, r2: float) -> float:
    """One-fold time antiderivative Ei(-|x|^2/4t)/(4 pi); 0 for t <= 0."""
    if t <= 0.0:
        return 0.0
    if r2 <= 0.0:
        raise ValueError("frak_g is singular at r2 = 0 for t > 0")
    z = r2 / (4.0 * t)
    if z > ARG_CUTOFF:
        return 0.0
    return expint_ei(-z) / FOUR_PI


def frak_G(t: float, r2: float) -> float:
    """Two-fold time antiderivative of the heat kernel; 0 for t <= 0."""
    if t <= 0.0:
        return 0.0
    if r2 <= 0.0:
        raise ValueError("frak_G is singular at r2 = 0 for t > 0")
    z = r2 / (4.0 * t)
    if z > ARG_CUTOFF:
        return 0.0
    return (t * math.exp(-z) + t * (1.0 + z) * expint_ei(-z)) / FOUR_PI


def frak_g_nd(t, r2):
    """Vectorized frak_g over broadcastable arrays (callers ensure r2 > 0)."""
    t = np.asarray(t, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    shape = np.broadcast(t, r2).shape
    out = np.zeros(shape)
    pos = np.broadcast_to(t > 0.0, shape)
    z = np.full(shape, np.inf)
    np.divide(r2, 4.0 * t, out=z, where=pos)
    live = z < ARG_CUTOFF
    if np.any(live):
        out[live] = _scipy_expi(-z[live]) / FOUR_PI
    return out


def frak_G_nd(t, r2):
    """Vectorized frak_G over broadcastable arrays (callers ensure r2 > 0)."""
    t = np.asarray(t, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    shape = np.broadcast(t, r2).shape
    out = np.zeros(shape)
    pos = np.broadcast_to(t > 0.0, shape)
    z = np.full(shape, np.inf)
    np.divide(r2, 4.0 * t, out=z, where=pos)
    live = z < ARG_CUTOFF
    if np.any(live):
        tt = np.broadcast_to(t, shape)[live]
        zz = z[live]
        out[live] = (tt * np.exp(-zz) + tt * (1.0 + zz) * _scipy_expi(-zz)) / FOUR_PI
    return out
