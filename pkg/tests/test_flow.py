"""Structure-field flow, loop periods, and the exponential map."""

import math

import numpy as np
import pytest

from solgeo import flow
from solgeo.solcore import slice_reach

SQRT_HALF = 1.0 / math.sqrt(2.0)


def test_mu_on_loop_levels():
    """On a unit vector of a period-L loop level, mu = pi / L."""
    for L in (5.0, 10.0, 20.0):
        lev = flow.level_from_period(L)
        u = (lev.x0, lev.y0, 0.0)
        assert flow.mu(u) * L == pytest.approx(math.pi, abs=1e-10)


def test_mu_homogeneous_and_degenerate():
    v = (0.3, 0.5, -0.2)
    assert flow.mu([2.0 * c for c in v]) == pytest.approx(2.0 * flow.mu(v), rel=1e-12)
    assert flow.mu((0.0, 1.0, 0.5)) == 0.0
    arr = np.array([v, (0.0, 1.0, 0.5)])
    out = flow.mu_array(arr)
    assert out[0] == pytest.approx(flow.mu(v), rel=1e-12)
    assert out[1] == 0.0


def test_classify():
    lev = flow.level_from_period(6.0)
    u = np.array([lev.x0, lev.y0, 0.0])
    assert flow.classify(6.0 * u) == "perfect"
    assert flow.classify(5.0 * u) == "small"
    assert flow.classify(7.0 * u) == "large"


def test_period_special_value_and_methods():
    assert flow.period_from_alpha(SQRT_HALF) == pytest.approx(
        math.pi * math.sqrt(2.0), abs=1e-10
    )
    for alpha in (0.05, 0.3, 0.7071):
        agm = flow.period_from_alpha(alpha, method="agm")
        ell = flow.period_from_alpha(alpha, method="elliptic")
        assert agm == pytest.approx(ell, abs=1e-12)


def test_period_log_asymptote():
    alpha = 0.01
    L = flow.period_from_alpha(alpha)
    assert abs(L + 4.0 * math.log(alpha / 2.0)) <= 0.02


def test_level_roundtrips():
    for L in (8.0, 16.0, 24.0):
        lev = flow.level_from_period(L)
        assert lev.period == pytest.approx(L, abs=1e-9)
        assert lev.x0**2 + lev.y0**2 == pytest.approx(1.0, abs=1e-14)
        assert lev.x0 * lev.y0 == pytest.approx(lev.alpha**2, abs=1e-13)
        again = flow.level_from_alpha(lev.alpha)
        assert again.period == pytest.approx(L, abs=1e-9)
    with pytest.raises(ValueError):
        flow.level_from_period(1.0)


def test_dperiod_dy_matches_finite_differences():
    h = 1e-6
    for y in (0.1, 0.3, 0.6):
        fd = (flow.period_from_y(y + h) - flow.period_from_y(y - h)) / (2.0 * h)
        assert flow.dperiod_dy(y) == pytest.approx(fd, rel=1e-7)
        assert flow.dperiod_dy(y) < 0.0


def test_flow_conservation_and_closure(level16):
    """Unit norm and F = xy are conserved; the loop closes after L."""
    L = level16.period
    v0 = np.array([level16.x0, level16.y0, 0.0])
    path = flow.integrate_flow(v0, 2.0 * L, "backward")
    ts = np.linspace(0.0, 2.0 * L, 2001)
    s = path.at(ts)
    norms = np.sqrt(np.sum(s * s, axis=0))
    assert np.max(np.abs(norms - 1.0)) <= 1e-9
    assert np.max(np.abs(s[0] * s[1] - level16.alpha**2)) <= 1e-9
    gap = path.at(L) - path.at(0.0)
    assert np.max(np.abs(gap)) <= 1e-7


def test_forward_backward_are_inverse():
    v0 = np.array([0.4, 0.5, math.sqrt(1.0 - 0.41)])
    fwd = flow.integrate_flow(v0, 3.0, "forward")
    back = flow.integrate_flow(fwd.at(3.0), 3.0, "backward")
    assert np.max(np.abs(back.at(3.0) - v0)) <= 1e-9
    with pytest.raises(ValueError):
        flow.integrate_flow(v0, 1.0, "sideways")


def test_geodesic_unit_speed():
    lev = flow.level_from_period(9.0)
    path = flow.exp_path(9.0 * np.array([lev.x0, lev.y0, 0.0]))
    for t in np.linspace(0.0, 1.0, 41):
        assert np.linalg.norm(path.frame(float(t))) == pytest.approx(9.0, abs=1e-9)


def test_endpoint_z_is_frame_integral():
    """The z-coordinate of exp(V) is the time integral of the frame z."""
    v = 6.0 * np.array([0.5, 0.3, math.sqrt(1.0 - 0.34)])
    path = flow.exp_path(v)
    ts = np.linspace(0.0, 1.0, 20001)
    zs = np.array([path.frame(float(t))[2] for t in ts])
    assert path.point(1.0).z == pytest.approx(np.trapezoid(zs, ts), abs=1e-8)


def test_hyperbolic_slice_shot():
    """Shooting within the y = 0 slice reproduces the half-plane reach."""
    r = 5.0
    a = 0.5 * r
    v = r * np.array([1.0 / math.cosh(a), 0.0, math.tanh(a)])
    p = flow.exp_map(v)
    assert p.x == pytest.approx(2.0 * math.sinh(a), abs=1e-4)
    assert p.x == pytest.approx(slice_reach(r), abs=1e-4)
    assert abs(p.y) <= 1e-10


def test_exp_map_batch_matches_adaptive(rng):
    vs = rng.normal(size=(12, 3))
    vs *= (8.0 * rng.uniform(0.2, 1.0, size=12) / np.linalg.norm(vs, axis=1))[:, None]
    out = flow.exp_map_batch(vs)
    for i in range(vs.shape[0]):
        ref = flow.exp_map(vs[i])
        scale = 1.0 + np.max(np.abs(ref.as_tuple()))
        assert np.max(np.abs(out[i] - ref.as_tuple())) <= 1e-7 * scale


def test_dexp_matches_finite_differences(rng):
    for _ in range(5):
        v = rng.normal(size=3) * 2.0
        w = rng.normal(size=3)
        h = 1e-6
        plus = np.array(flow.exp_map(v + h * w).as_tuple())
        minus = np.array(flow.exp_map(v - h * w).as_tuple())
        fd = (plus - minus) / (2.0 * h)
        got = flow.dexp(v, w)
        assert np.max(np.abs(got - fd)) <= 1e-5 * (1.0 + np.max(np.abs(fd)))


def test_dexp_at_zero_is_identity():
    for w in np.eye(3):
        assert np.max(np.abs(flow.dexp(np.zeros(3), w) - w)) <= 1e-10
