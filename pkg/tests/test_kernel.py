import numpy as np
import pytest

from heatbem import kernel
from heatbem.quadrature import gauss_legendre


# Frozen with mpmath.ei at 25 digits.
EI_VALUES = {
    -0.1: -1.8229239584193906159,
    -1.0: -0.21938393439552027368,
    -2.0: -0.048900510708061119567,
    -6.0: -0.0003600824521626586593,
    -6.5: -0.00020342986683939819737,
    -10.0: -4.1569689296853242774e-06,
    -50.0: -3.7832640295504590187e-24,
    -200.0: -6.8852261063076355977e-90,
}


@pytest.mark.parametrize("x,val", sorted(EI_VALUES.items()))
def test_expint_ei_reference_values(x, val):
    assert kernel.expint_ei(x) == pytest.approx(val, rel=5e-14)


def test_expint_ei_domain_error():
    with pytest.raises(ValueError):
        kernel.expint_ei(0.0)
    with pytest.raises(ValueError):
        kernel.expint_ei(1.0)


def test_expint_ei_monotone_and_envelope():
    # Ei(-2) > Ei(-1): values increase towards 0 as the argument moves left,
    # by positivity of the defining integrand; envelope bound for large z.
    assert kernel.expint_ei(-2.0) > kernel.expint_ei(-1.0)
    xs = -np.linspace(0.05, 30, 120)
    vals = np.array([kernel.expint_ei(x) for x in xs])
    assert np.all(np.diff(vals) > 0.0)
    z = 50.0
    v = kernel.expint_ei(-z)
    assert -np.exp(-z) / z < v < 0.0


def test_ei_neg_matches_scalar():
    z = np.geomspace(1e-6, 700.0, 300)
    ref = np.array([kernel.expint_ei(-zz) for zz in z])
    got = kernel.ei_neg(z)
    assert np.allclose(got, ref, rtol=2e-13, atol=1e-300)
    assert kernel.ei_neg(np.array([800.0]))[0] == 0.0


def test_heat_G_basic():
    assert kernel.heat_G(-1.0, (0.3, 0.2)) == 0.0
    assert kernel.heat_G(0.0, (0.0, 0.0)) == 0.0
    assert kernel.heat_G(1.0, (0.0, 0.0)) == pytest.approx(1.0 / (4 * np.pi), rel=1e-15)


def test_heat_G_normalization():
    # int_R2 G(t,x) dx = 1: polar coordinates give int_0^inf 2 pi r G dr.
    t = 0.3
    rule = gauss_legendre(64)
    total = 0.0
    for lo, hi in [(0.0, 1.0), (1.0, 3.0), (3.0, 8.0)]:
        r = lo + (hi - lo) * rule.nodes
        w = (hi - lo) * rule.weights
        total += np.sum(w * 2 * np.pi * r * kernel.heat_G_r2(t, r * r))
    assert total == pytest.approx(1.0, abs=1e-13)


def test_frak_g_values_and_causality():
    assert kernel.frak_g(0.0, 1.0) == 0.0
    assert kernel.frak_g(-2.0, 1.0) == 0.0
    # g_1 at |x| = 2: Ei(-1)/(4 pi)
    assert kernel.frak_g(1.0, 4.0) == pytest.approx(
        EI_VALUES[-1.0] / (4 * np.pi), rel=1e-13
    )
    with pytest.raises(ValueError):
        kernel.frak_g(1.0, 0.0)


def test_frak_G_causality_and_decay():
    assert kernel.frak_G(0.0, 1.0) == 0.0
    assert kernel.frak_G(-0.5, 1.0) == 0.0
    assert abs(kernel.frak_G(1.0, 100.0)) < 1e-9


def _time_quad(f, a, b, n=64):
    rule = gauss_legendre(n)
    t = a + (b - a) * rule.nodes
    return (b - a) * float(np.dot(rule.weights, f(t)))


def test_one_time_integral_identity_example():
    t, ta, tb, r = 1.0, 0.0, 0.5, 0.7
    lhs = _time_quad(lambda s: kernel.heat_G_r2(t - s, r * r), ta, tb)
    rhs = kernel.frak_g(t - tb, r * r) - kernel.frak_g(t - ta, r * r)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_two_time_integrals_identity_example():
    a, b, ta, tb, r = 0.5, 1.0, 0.0, 0.25, 0.6
    rule = gauss_legendre(64)
    tt = a + (b - a) * rule.nodes
    lhs = (b - a) * np.dot(
        rule.weights,
        [_time_quad(lambda s: kernel.heat_G_r2(t - s, r * r), ta, tb) for t in tt],
    )
    rhs = (
        kernel.frak_G(b - tb, r * r)
        - kernel.frak_G(b - ta, r * r)
        + kernel.frak_G(a - ta, r * r)
        - kernel.frak_G(a - tb, r * r)
    )
    assert lhs == pytest.approx(rhs, abs=1e-12)


def _graded_G_time_integral(t, ta, tb, r2):
    """Oracle for int_ta^tb G(t - s, r2) ds.

    In the time-lag variable u = t - s the integrand decays like
    exp(-r2/4u)/u towards u = 0 (a boundary layer of width ~ r2), so the
    panels are graded geometrically towards the lower lag limit.
    """
    u1 = t - ta
    if u1 <= 0.0:
        return 0.0
    u0 = max(t - tb, 0.0)
    floor = max(r2 / 3000.0, 1e-300)
    lo = max(u0, min(floor, u1 / 2))
    rule = gauss_legendre(16)
    total = 0.0
    hi0 = lo
    while hi0 < u1:
        hi = min(2.0 * hi0, u1) if hi0 > 0 else u1
        uu = hi0 + (hi - hi0) * rule.nodes
        total += (hi - hi0) * float(np.dot(rule.weights, kernel.heat_G_r2(uu, r2)))
        hi0 = hi
    return total


def test_one_time_integral_random_tuples():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        ta = rng.uniform(0.0, 0.8)
        tb = ta + rng.uniform(0.05, 1.0)
        t = rng.uniform(0.0, 2.0)
        r = rng.uniform(0.05, 2.0)
        lhs = _graded_G_time_integral(t, ta, tb, r * r)
        rhs = kernel.frak_g(t - tb, r * r) - kernel.frak_g(t - ta, r * r)
        if abs(rhs) > 1e-20:
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
        else:
            worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-11


def test_two_time_integrals_random_tuples():
    rng = np.random.default_rng(11)
    rule = gauss_legendre(24)
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(0.0, 0.8)
        b = a + rng.uniform(0.05, 1.0)
        ta = rng.uniform(0.0, 0.8)
        tb = ta + rng.uniform(0.05, 1.0)
        r = rng.uniform(0.1, 2.0)
        # outer integral split at the inner breakpoints where the one-time
        # integral has boundary layers, graded towards them
        breaks = sorted({a, b} | {p for p in (ta, tb) if a < p < b})
        lhs = 0.0
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            for left, right in _graded_subpanels(lo, hi, r * r):
                tt = left + (right - left) * rule.nodes
                vals = [_graded_G_time_integral(t, ta, tb, r * r) for t in tt]
                lhs += (right - left) * float(np.dot(rule.weights, vals))
        rhs = (
            kernel.frak_G(b - tb, r * r)
            - kernel.frak_G(b - ta, r * r)
            + kernel.frak_G(a - ta, r * r)
            - kernel.frak_G(a - tb, r * r)
        )
        if abs(rhs) > 1e-20:
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
        else:
            worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-11


def _graded_subpanels(lo, hi, r2):
    """Geometric panels of [lo, hi] refined towards both endpoints."""
    floor = max(r2 / 3000.0, (hi - lo) * 1e-14)
    mid = 0.5 * (lo + hi)
    cuts = [lo]
    w = min(floor, mid - lo)
    while lo + w < mid:
        cuts.append(lo + w)
        w *= 2
    cuts.append(mid)
    right_cuts = [hi - (c - lo) for c in cuts[::-1] if hi - (c - lo) > mid]
    cuts.extend(right_cuts)
    cuts = sorted(set(cuts))
    return list(zip(cuts[:-1], cuts[1:]))


def test_frak_g_log_singularity_structure():
    # g_t(x) - log(|x|^2)/(4 pi) extends smoothly to |x| = 0: Richardson
    # extrapolation along |x| = 2^-k converges to a finite limit.
    t = 0.7
    vals = []
    for k in range(4, 16):
        r2 = 4.0 ** (-k)
        vals.append(kernel.frak_g(t, r2) - np.log(r2) / (4 * np.pi))
    diffs = np.abs(np.diff(vals))
    # first-order Richardson: increments shrink by the mesh ratio 1/4
    assert np.all(diffs[1:] < 0.3 * diffs[:-1] + 1e-15)
    limit = (kernel.EULER_GAMMA - np.log(4 * t)) / (4 * np.pi)
    assert vals[-1] == pytest.approx(limit, rel=1e-9)
