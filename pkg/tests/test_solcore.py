"""Group arithmetic, metric helpers, and half-plane embeddings."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solgeo import solcore
from solgeo.solcore import IDENTITY, SolPoint, TangentVec

coord = st.floats(min_value=-50.0, max_value=50.0)
height = st.floats(min_value=-20.0, max_value=20.0)
points = st.builds(SolPoint, coord, coord, height)
vecs = st.builds(TangentVec, coord, coord, coord)


def _mag(*pts: SolPoint) -> float:
    """Largest intermediate magnitude of products of the given points:
    coordinates are multiplied by e^{|z|} factors, so rounding scales
    with it."""
    m = 1.0
    zsum = 0.0
    for p in pts:
        m = max(m, abs(p.x), abs(p.y))
        zsum += abs(p.z)
    return m * math.exp(min(zsum, 60.0))


def close(p: SolPoint, q: SolPoint, scale: float = 1.0, tol: float = 1e-12) -> bool:
    s = max(scale, 1.0)
    return (
        abs(p.x - q.x) <= tol * s
        and abs(p.y - q.y) <= tol * s
        and abs(p.z - q.z) <= tol * s
    )


@settings(deadline=None, max_examples=200)
@given(p=points, q=points, g=points)
def test_group_axioms(p, q, g):
    assert close(solcore.mul(p, IDENTITY), p)
    assert close(solcore.mul(IDENTITY, p), p)
    assert close(solcore.mul(p, solcore.inverse(p)), IDENTITY, scale=_mag(p))
    assert close(solcore.mul(solcore.inverse(p), p), IDENTITY, scale=_mag(p))
    left = solcore.mul(solcore.mul(g, p), q)
    right = solcore.mul(g, solcore.mul(p, q))
    assert close(left, right, scale=_mag(g, p, q), tol=1e-11)


@settings(deadline=None, max_examples=200)
@given(g=points, p=points, t=vecs)
def test_left_invariance_of_metric(g, p, t):
    """|dL_g t|_{g p} = |t|_p: the metric is left-invariant."""
    n0 = solcore.metric_norm(p, t)
    moved = solcore.left_translate_vec(g, t)
    n1 = solcore.metric_norm(solcore.mul(g, p), moved)
    assert n1 == pytest.approx(n0, rel=1e-10, abs=1e-12)


@settings(deadline=None, max_examples=100)
@given(p=points, t1=vecs, t2=vecs, a=st.floats(min_value=-3.0, max_value=3.0))
def test_area_element_properties(p, t1, t2, a):
    # The Gram determinant cancels catastrophically for near-parallel
    # vectors, so tolerances carry the product of the two norms.
    prod = solcore.metric_norm(p, t1) * solcore.metric_norm(p, t2)
    base = solcore.area_element(p, t1, t2)
    assert abs(solcore.area_element(p, t2, t1) - base) <= 1e-7 * (prod + 1.0)
    scaled = solcore.area_element(p, TangentVec(a * t1.u, a * t1.v, a * t1.w), t2)
    assert abs(scaled - abs(a) * base) <= 1e-6 * (abs(a) * prod + 1.0)
    assert solcore.area_element(p, t1, t1) <= 1e-6 * (
        solcore.metric_norm(p, t1) ** 2 + 1.0
    )


def test_pi_z_is_homomorphism():
    p = SolPoint(1.0, -2.0, 0.7)
    q = SolPoint(-0.3, 4.0, -1.1)
    assert solcore.pi_z(solcore.mul(p, q)) == pytest.approx(
        solcore.pi_z(p) + solcore.pi_z(q), abs=1e-15
    )


def test_projections_and_densities():
    p = SolPoint(1.0, 2.0, 3.0)
    assert solcore.project(p, "X") == (2.0, 3.0)
    assert solcore.project(p, "Y") == (1.0, 3.0)
    assert solcore.project(p, "Z") == (1.0, 2.0)
    assert solcore.plane_density(3.0, "X") == pytest.approx(math.exp(3.0))
    assert solcore.plane_density(3.0, "Y") == pytest.approx(math.exp(-3.0))
    assert solcore.plane_density(3.0, "Z") == 1.0
    with pytest.raises(ValueError):
        solcore.project(p, "W")


def test_uhp_embeddings_are_isometric():
    """Half-plane distances match direct geodesic facts in the planes."""
    # Vertical segment in Pi_Y from z=0 to z=h has length |h|.
    h = 1.3
    d = solcore.uhp_distance(solcore.uhp_from_piy(IDENTITY), solcore.uhp_from_piy(SolPoint(0, 0, h)))
    assert d == pytest.approx(h, abs=1e-12)
    # Horizontal offset at z=0 matches the closed slice distance.
    x = 2.25
    d = solcore.uhp_distance(solcore.uhp_from_piy(IDENTITY), solcore.uhp_from_piy(SolPoint(x, 0, 0)))
    assert d == pytest.approx(solcore.slice_distance(x), abs=1e-12)
    # Pi_X flips the sign of z in the height coordinate.
    assert solcore.uhp_from_pix(SolPoint(0, 1.0, 0.5))[1] == pytest.approx(math.exp(-0.5))


def test_slice_distance_reach_roundtrip():
    for r in (0.5, 2.0, 7.0, 12.0):
        assert solcore.slice_distance(solcore.slice_reach(r)) == pytest.approx(r, abs=1e-12)
    assert solcore.slice_halfwidth(3.0) == pytest.approx(math.sinh(3.0))
    with pytest.raises(ValueError):
        solcore.slice_distance(-1.0)


def test_z_overflow_guard():
    with pytest.raises(OverflowError):
        solcore.mul(SolPoint(0, 0, 1e4), SolPoint(1, 1, 0))
