"""Symmetric flowlines: the coupled (x, y, z, a, b) system.

A loop level of period L is traversed backward from its z = 0 seed
(x0, y0, 0), x0 > y0 > 0.  Alongside the flow we integrate the endpoint
coordinates of the associated geodesic segment family:

    a' = 2x + a z,      b' = 2y - b z,      a(0) = b(0) = 0,

together with cbar' = z, the accumulated z-coordinate.  The halved
quantities ua = a/2, ub = b/2 are the coordinates of the half-flowline
endpoint: exp(t * u_t) = (a(t)/2, b(t)/2, cbar(t)) where u_t is the
backward-flow state at time t (the doubling identity).

Key exact identities carried by this system:

    a x - b y = 2 z                    (pointwise)
    (a x)' = 2 x^2,   (b y)' = 2 y^2   (integral form used as oracle)
    b(l)/a(l) = y(0)/x(0)              (l = L/2)
    a(L) = 2 b(l),    ua(L) = b(l)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .flow import LoopLevel, level_from_period
from .solcore import SolPoint

__all__ = [
    "SymFlowPath",
    "solve_symmetric",
    "identity_residuals",
    "doubling_endpoint",
    "endpoint_asymptotics",
    "trajectory_to_csv",
]

# State layout used throughout this module and by the variational system.
IDX_X, IDX_Y, IDX_Z, IDX_A, IDX_B, IDX_C = range(6)


def _rhs(_t, s):
    x, y, z, a, b, _c = s
    return (-x * z, y * z, x * x - y * y, 2.0 * x + a * z, 2.0 * y - b * z, z)


class SymFlowPath:
    """Dense solution of the symmetric-flowline system on [0, tmax]."""

    def __init__(self, level: LoopLevel, sol, tmax: float):
        self.level = level
        self._sol = sol
        self.tmax = tmax

    def state(self, t) -> np.ndarray:
        """Full state(s) (x, y, z, a, b, cbar); shape (6,) or (6, n)."""
        return self._sol(t)

    def x(self, t):
        return self._sol(t)[IDX_X]

    def y(self, t):
        return self._sol(t)[IDX_Y]

    def z(self, t):
        return self._sol(t)[IDX_Z]

    def a(self, t):
        return self._sol(t)[IDX_A]

    def b(self, t):
        return self._sol(t)[IDX_B]

    def ua(self, t):
        return 0.5 * self._sol(t)[IDX_A]

    def ub(self, t):
        return 0.5 * self._sol(t)[IDX_B]

    def cbar(self, t):
        return self._sol(t)[IDX_C]


def solve_symmetric(
    level: LoopLevel,
    tmax: float | None = None,
    rtol: float = 1e-12,
    atol: float = 1e-12,
) -> SymFlowPath:
    """Integrate the (x, y, z, a, b, cbar) system from the z = 0 seed.

    Defaults to the doubled period tmax = 2 L (everything downstream
    lives in [0, 2L]).
    """
    if tmax is None:
        tmax = 2.0 * level.period
    s0 = np.array([level.x0, level.y0, 0.0, 0.0, 0.0, 0.0])
    res = solve_ivp(
        _rhs, (0.0, tmax), s0, method="DOP853", rtol=rtol, atol=atol, dense_output=True
    )
    if not res.success:
        raise RuntimeError(f"symmetric flowline integration failed: {res.message}")
    return SymFlowPath(level, res.sol, tmax)


def identity_residuals(
    level: LoopLevel, rtol: float = 1e-12, atol: float = 1e-12
) -> dict[str, float]:
    """Maximum residuals of the exact identities of the system.

    Keys: 'pointwise' (max |ax - by - 2z| on a dense [0, L] grid),
    'ax_integral' / 'by_integral' (vs. quadrature of 2x^2, 2y^2 at
    t in {L/4, L/2, L}), 'ratio' (b(l)/a(l) - y0/x0), 'endpoint_double'
    (a(L) - 2 b(l)), 'endpoint_half' (ua(L) - b(l)).
    """
    L = level.period
    path = solve_symmetric(level, 2.0 * L, rtol=rtol, atol=atol)

    ts = np.linspace(0.0, L, 2001)
    s = path.state(ts)
    pointwise = float(
        np.max(np.abs(s[IDX_A] * s[IDX_X] - s[IDX_B] * s[IDX_Y] - 2.0 * s[IDX_Z]))
    )

    ax_res = 0.0
    by_res = 0.0
    for t in (0.25 * L, 0.5 * L, L):
        ix, _ = quad(lambda u: 2.0 * path.x(u) ** 2, 0.0, t, limit=400, epsabs=1e-12)
        iy, _ = quad(lambda u: 2.0 * path.y(u) ** 2, 0.0, t, limit=400, epsabs=1e-12)
        ax_res = max(ax_res, abs(path.a(t) * path.x(t) - ix))
        by_res = max(by_res, abs(path.b(t) * path.y(t) - iy))

    half = 0.5 * L
    ratio = path.b(half) / path.a(half) - level.y0 / level.x0
    return {
        "pointwise": pointwise,
        "ax_integral": ax_res,
        "by_integral": by_res,
        "ratio": float(abs(ratio)),
        "endpoint_double": float(abs(path.a(L) - 2.0 * path.b(half))),
        "endpoint_half": float(abs(path.ua(L) - path.b(half))),
    }


def doubling_endpoint(level: LoopLevel, t: float, path: SymFlowPath | None = None) -> SolPoint:
    """Endpoint of the half-flowline geodesic: (a(t)/2, b(t)/2, cbar(t)).

    Cross-module contract: equals exp_map(t * u_t) for the backward-flow
    state u_t = (x(t), y(t), z(t)).
    """
    if t < 0.0 or t > 2.0 * level.period:
        raise ValueError(f"t = {t} outside [0, 2L]")
    if path is None:
        path = solve_symmetric(level, max(t, 1e-9))
    s = path.state(t)
    return SolPoint(0.5 * float(s[IDX_A]), 0.5 * float(s[IDX_B]), float(s[IDX_C]))


def endpoint_asymptotics(L_grid, rtol: float = 1e-12, atol: float = 1e-12) -> list[dict]:
    """Endpoint growth table across a grid of periods (values >= 8).

    Per grid value G (playing both the period L and the radius r):
      b_half      = b(L/2) on the period-G level          (limit 2)
      ab_ratio    = a(L/2) b(L/2) / e^{L/2}               (limit 1)
      ua_rr, ub_rr    = half endpoint at t = r on the period-r level,
                        asymptotically (2, e^{r/2}/2)
      ua_r2r, ub_r2r  = half endpoint at t = r on the period-2r level,
                        asymptotically (e^r/4, 1)
    Ratios against the asymptotic forms are left to the caller.
    """
    rows = []
    for G in L_grid:
        if G < 8.0:
            raise ValueError("asymptotic table expects grid values >= 8")
        lev = level_from_period(float(G))
        path = solve_symmetric(lev, G, rtol=rtol, atol=atol)
        half = 0.5 * G
        lev2 = level_from_period(2.0 * float(G))
        path2 = solve_symmetric(lev2, G, rtol=rtol, atol=atol)
        rows.append(
            {
                "L": float(G),
                "b_half": float(path.b(half)),
                "ab_ratio": float(path.a(half) * path.b(half) / math.exp(half)),
                "ua_rr": float(path.ua(G)),
                "ub_rr": float(path.ub(G)),
                "ua_r2r": float(path2.ua(G)),
                "ub_r2r": float(path2.ub(G)),
            }
        )
    return rows


def trajectory_to_csv(path: SymFlowPath, file, samples: int = 1001) -> None:
    """Write a trajectory as CSV: t,x,y,z,a,b,ua,ub,cbar."""
    ts = np.linspace(0.0, path.tmax, samples)
    s = path.state(ts)
    file.write("t,x,y,z,a,b,ua,ub,cbar\n")
    for i, t in enumerate(ts):
        row = (
            t,
            s[IDX_X, i],
            s[IDX_Y, i],
            s[IDX_Z, i],
            s[IDX_A, i],
            s[IDX_B, i],
            0.5 * s[IDX_A, i],
            0.5 * s[IDX_B, i],
            s[IDX_C, i],
        )
        file.write(",".join(f"{v:.17g}" for v in row) + "\n")
