"""Sol group arithmetic and the left-invariant metric.

Sol is R^3 with the group law

    (x, y, z) * (a, b, c) = (e^z a + x, e^-z b + y, c + z)

and the left-invariant Riemannian metric e^{-2z} dx^2 + e^{2z} dy^2 + dz^2.
The identity is the origin, and the differential of left translation by
g scales a tangent vector (u, v, w) at the identity to
(e^{g_z} u, e^{-g_z} v, w) at g.

The coordinate planes are geodesically embedded: Pi_X = {x = 0} and
Pi_Y = {y = 0} are hyperbolic planes, Pi_Z = {z = 0} is a Euclidean
plane through the identity (not flat in Sol, but a convenient screen).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SolPoint",
    "TangentVec",
    "IDENTITY",
    "mul",
    "inverse",
    "left_translate_vec",
    "metric_norm",
    "area_element",
    "plane_density",
    "project",
    "pi_z",
    "uhp_from_pix",
    "uhp_from_piy",
    "uhp_distance",
    "slice_distance",
    "slice_reach",
    "slice_halfwidth",
]

# exp(z) overflows IEEE doubles slightly above 709; refuse to silently
# produce inf in group operations.
_Z_OVERFLOW = 700.0


@dataclass(frozen=True)
class SolPoint:
    """A point of Sol in exponential coordinates."""

    x: float
    y: float
    z: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class TangentVec:
    """A tangent vector, components in the coordinate frame."""

    u: float
    v: float
    w: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.u, self.v, self.w)


IDENTITY = SolPoint(0.0, 0.0, 0.0)


def _check_z(z: float) -> None:
    if abs(z) > _Z_OVERFLOW:
        raise OverflowError(f"|z| = {abs(z)} exceeds {_Z_OVERFLOW}; e^z overflows")


def mul(p: SolPoint, q: SolPoint) -> SolPoint:
    """Group product p * q."""
    _check_z(p.z)
    ez = math.exp(p.z)
    return SolPoint(ez * q.x + p.x, q.y / ez + p.y, q.z + p.z)


def inverse(p: SolPoint) -> SolPoint:
    """Group inverse: (-e^{-z} x, -e^{z} y, -z)."""
    _check_z(p.z)
    ez = math.exp(p.z)
    return SolPoint(-p.x / ez, -p.y * ez, -p.z)


def left_translate_vec(g: SolPoint, t: TangentVec) -> TangentVec:
    """Push a tangent vector at the identity to the point g by dL_g."""
    _check_z(g.z)
    ez = math.exp(g.z)
    return TangentVec(ez * t.u, t.v / ez, t.w)


def metric_norm(p: SolPoint, t: TangentVec) -> float:
    """Length of a tangent vector at p in the Sol metric."""
    _check_z(p.z)
    ez = math.exp(p.z)
    return math.sqrt((t.u / ez) ** 2 + (t.v * ez) ** 2 + t.w**2)


def area_element(p: SolPoint, t1: TangentVec, t2: TangentVec) -> float:
    """Riemannian area of the parallelogram spanned by t1, t2 at p.

    Gram determinant of the (diagonal) metric: sqrt(g11 g22 - g12^2).
    """
    _check_z(p.z)
    e2 = math.exp(-2.0 * p.z)
    f2 = math.exp(2.0 * p.z)
    g11 = e2 * t1.u**2 + f2 * t1.v**2 + t1.w**2
    g22 = e2 * t2.u**2 + f2 * t2.v**2 + t2.w**2
    g12 = e2 * t1.u * t2.u + f2 * t1.v * t2.v + t1.w * t2.w
    return math.sqrt(max(g11 * g22 - g12 * g12, 0.0))


def plane_density(z: float, plane: str) -> float:
    """Area density of the coordinate-plane sections at height z.

    The induced area forms are: Pi_X -> e^{z} dy dz, Pi_Y -> e^{-z} dx dz,
    Pi_Z -> dx dy.
    """
    if plane == "X":
        return math.exp(z)
    if plane == "Y":
        return math.exp(-z)
    if plane == "Z":
        return 1.0
    raise ValueError(f"plane must be 'X', 'Y' or 'Z', got {plane!r}")


def project(p: SolPoint, plane: str) -> tuple[float, float]:
    """Coordinate projection onto one of the three coordinate planes.

    Returns the in-plane coordinates: Pi_X -> (y, z), Pi_Y -> (x, z),
    Pi_Z -> (x, y).
    """
    if plane == "X":
        return (p.y, p.z)
    if plane == "Y":
        return (p.x, p.z)
    if plane == "Z":
        return (p.x, p.y)
    raise ValueError(f"plane must be 'X', 'Y' or 'Z', got {plane!r}")


def pi_z(p: SolPoint) -> float:
    """Projection onto the z-axis; a homomorphism Sol -> R, so the value
    adds under concatenation of paths."""
    return p.z


def uhp_from_pix(p: SolPoint) -> tuple[float, float]:
    """Isometry Pi_X -> upper half-plane: (0, y, z) -> (y, e^{-z}).

    The metric e^{2z} dy^2 + dz^2 pulls back to (du^2 + dv^2)/v^2.
    """
    return (p.y, math.exp(-p.z))


def uhp_from_piy(p: SolPoint) -> tuple[float, float]:
    """Isometry Pi_Y -> upper half-plane: (x, 0, z) -> (x, e^{z})."""
    return (p.x, math.exp(p.z))


def uhp_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Hyperbolic distance in the upper half-plane model."""
    du = a[0] - b[0]
    dv = a[1] - b[1]
    arg = 1.0 + (du * du + dv * dv) / (2.0 * a[1] * b[1])
    return math.acosh(arg)


def slice_distance(x: float) -> float:
    """Hyperbolic distance within Pi_Y from the identity to (x, 0, 0).

    Both points sit at height e^z = 1 in the half-plane model, so the
    distance is acosh(1 + x^2/2) = 2 asinh(x/2).
    """
    if x < 0.0:
        raise ValueError("slice_distance expects x >= 0")
    return 2.0 * math.asinh(0.5 * x)


def slice_reach(r: float) -> float:
    """Inverse of slice_distance: the x-coordinate of the farthest point
    of the z = 0 axis reached within hyperbolic distance r,
    2 sinh(r/2) = e^{r/2} - e^{-r/2}."""
    return 2.0 * math.sinh(0.5 * r)


def slice_halfwidth(r: float) -> float:
    """Euclidean half-width of the radius-r hyperbolic disk about the
    identity inside Pi_Y: max |x| = (e^r - e^{-r})/2 = sinh(r).  The same
    bound holds for |y| in Pi_X by the flip symmetry."""
    return math.sinh(r)
