"""Variational system: derivatives of the symmetric flowline with
respect to the loop period L, at fixed time t.

The base system of symflow is linearized and integrated jointly:

    dx' = -dx z - x dz        da' = 2 dx + da z + a dz
    dy' =  dy z + y dz        db' = 2 dy - db z - b dz
    dz' = 2 x dx - 2 y dy

with dz(0) = da(0) = db(0) = 0 and the seed derivatives obtained by the
chain rule through the period map y0 -> L(y0):

    dy(0) = 1 / (dL/dy)(y0),      dx(0) = -(y0/x0) dy(0).

Auxiliary ratios X = dx/x, Y = dy/y, Z = dz, B = db/b satisfy X' = -Z,
Y' = Z (so X + Y is constant) and the endpoint identity

    B = (x ua / (2 y ub)) X - Y/2 - Z / (2 y ub).

The isochronal curve of radius r is L -> (ua_L(r), ub_L(r)); it has a
single cusp where db_L(r) = 0, tracked here via the vanishing point t_L
(the unique root of db_L on (L-1, L)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .flow import LoopLevel, dperiod_dy, level_from_period

__all__ = [
    "VarPath",
    "CuspTrack",
    "solve_variational",
    "aux_report",
    "upsilon",
    "vanishing_point",
    "monotonicity_scan",
    "cusp_for_radius",
    "variation_lemma_checks",
    "isochron_to_csv",
    "aux_to_csv",
    "cusp_to_csv",
]

# b is a 0/0 ratio at t = 0; mask B below this threshold on b.
_B_MASK = 1e-8


def _rhs(_t, s):
    x, y, z, a, b, _c, dx, dy, dz, da, db = s
    return (
        -x * z,
        y * z,
        x * x - y * y,
        2.0 * x + a * z,
        2.0 * y - b * z,
        z,
        -dx * z - x * dz,
        dy * z + y * dz,
        2.0 * x * dx - 2.0 * y * dy,
        2.0 * dx + da * z + a * dz,
        2.0 * dy - db * z - b * dz,
    )


class VarPath:
    """Dense solution of the joint base + variational system.

    State layout: (x, y, z, a, b, cbar, dx, dy, dz, da, db).
    """

    def __init__(self, level: LoopLevel, sol, tmax: float):
        self.level = level
        self._sol = sol
        self.tmax = tmax

    def state(self, t) -> np.ndarray:
        return self._sol(t)

    def base(self, t) -> np.ndarray:
        """(x, y, z) of the backward flow."""
        return self._sol(t)[:3]

    def db(self, t):
        return self._sol(t)[10]

    def aux(self, t) -> np.ndarray:
        """(X, Y, Z, B) at time(s) t; B is NaN where b <= 1e-8."""
        s = self._sol(t)
        x, y, b = s[0], s[1], s[4]
        with np.errstate(divide="ignore", invalid="ignore"):
            X = s[6] / x
            Y = s[7] / y
            B = np.where(np.abs(b) > _B_MASK, s[10] / np.where(b == 0.0, 1.0, b), np.nan)
        return np.stack([X, Y, s[8], B])


def seed_derivatives(level: LoopLevel) -> tuple[float, float]:
    """(dx(0), dy(0)): derivative of the seed w.r.t. the period.

    dy(0) = 1/(dL/dy)(y0) by inverting the period map; dx(0) follows
    from x0^2 + y0^2 = 1.
    """
    slope = dperiod_dy(level.y0)
    if slope == 0.0:
        raise ZeroDivisionError("dL/dy vanishes at this level; seed derivative undefined")
    dy0 = 1.0 / slope
    return -(level.y0 / level.x0) * dy0, dy0


def solve_variational(
    level: LoopLevel,
    tmax: float | None = None,
    rtol: float = 1e-12,
    atol: float = 1e-12,
) -> VarPath:
    """Integrate the 11-dimensional joint system on [0, tmax] (default 2L)."""
    if tmax is None:
        tmax = 2.0 * level.period
    dx0, dy0 = seed_derivatives(level)
    s0 = np.zeros(11)
    s0[0] = level.x0
    s0[1] = level.y0
    s0[6] = dx0
    s0[7] = dy0
    res = solve_ivp(
        _rhs, (0.0, tmax), s0, method="DOP853", rtol=rtol, atol=atol, dense_output=True
    )
    if not res.success:
        raise RuntimeError(f"variational integration failed: {res.message}")
    return VarPath(level, res.sol, tmax)


def aux_report(level: LoopLevel, path: VarPath | None = None) -> dict[str, tuple]:
    """(X, Y, Z, B) at t in {0, L/2, L}.  B(0) is NaN (0/0 limit).

    Large-L asymptotes: the t = L tuple tends to (0, -1/2, -1, 1/2) and
    the t = L/2 tuple to (-1/2, 0, 1/2, -1/2).
    """
    L = level.period
    if path is None:
        path = solve_variational(level, L)
    out = {}
    for name, t in (("t0", 0.0), ("half", 0.5 * L), ("full", L)):
        out[name] = tuple(float(v) for v in path.aux(t))
    return out


def upsilon(
    r: float,
    L: float,
    path: VarPath | None = None,
    rtol: float = 1e-12,
    atol: float = 1e-12,
) -> dict:
    """Point and velocity of the isochronal curve at parameter L.

    point    = (ua_L(r), ub_L(r)) in the Z plane,
    velocity = (da/2, db/2) at t = r (the L-derivative of the point),
    slope    = -x_L(r)/y_L(r) (valid wherever the velocity is nonzero;
               the velocity components satisfy x v1 + y v2 = 0).
    """
    if not L >= r:
        raise ValueError(f"upsilon requires L >= r, got L={L}, r={r}")
    if path is None:
        path = solve_variational(level_from_period(L), r, rtol=rtol, atol=atol)
    s = path.state(r)
    return {
        "L": float(L),
        "point": (0.5 * float(s[3]), 0.5 * float(s[4])),
        "velocity": (0.5 * float(s[9]), 0.5 * float(s[10])),
        "slope": -float(s[0]) / float(s[1]),
    }


def vanishing_point(
    level: LoopLevel,
    path: VarPath | None = None,
    grid: int = 200,
    xtol: float = 1e-10,
) -> float:
    """The unique root t_L of db(t) = 0 on (L-1, L).

    Verifies the bracket db(L-1) < 0 < db(L) and, on a grid over
    [L/2, L], that db < 0 before the root and > 0 after it.  Raises if
    the sign structure is absent (L below the working threshold).
    """
    L = level.period
    if path is None:
        path = solve_variational(level, L)
    lo, hi = L - 1.0, L
    if not (path.db(lo) < 0.0 < path.db(hi)):
        raise ValueError(
            f"no sign change of db on [L-1, L] at L={L}: "
            f"db(L-1)={path.db(lo):.3e}, db(L)={path.db(hi):.3e}"
        )
    t_root = float(brentq(path.db, lo, hi, xtol=xtol))
    ts = np.linspace(0.5 * L, L, grid)
    db = path.db(ts)
    bad_before = np.any(db[ts < t_root - 1e-6] >= 0.0)
    bad_after = np.any(db[ts > t_root + 1e-6] <= 0.0)
    if bad_before or bad_after:
        raise ValueError(f"db changes sign more than once on [L/2, L] at L={L}")
    return t_root


def monotonicity_scan(L_grid, rtol: float = 1e-12, atol: float = 1e-12) -> list[dict]:
    """Vanishing points across a period grid with centered dt_L/dL.

    Rows: {L, t_L, s_L = L - t_L, dtdL (NaN at the grid ends)}.
    """
    L_grid = [float(L) for L in L_grid]
    t_vals = []
    for L in L_grid:
        lev = level_from_period(L)
        t_vals.append(vanishing_point(lev, solve_variational(lev, L, rtol=rtol, atol=atol)))
    rows = []
    for i, L in enumerate(L_grid):
        if 0 < i < len(L_grid) - 1:
            dtdL = (t_vals[i + 1] - t_vals[i - 1]) / (L_grid[i + 1] - L_grid[i - 1])
        else:
            dtdL = math.nan
        rows.append({"L": L, "t_L": t_vals[i], "s_L": L - t_vals[i], "dtdL": dtdL})
    return rows


@dataclass(frozen=True)
class CuspTrack:
    """Cusp of the isochronal curve of radius r.

    Lstar is the parameter where the curve's velocity vanishes (i.e.
    t_{Lstar} = r); kappa = (a_r, b_r) is the cusp location in the Z
    plane; s_L = Lstar - r; sign_changes counts roots of db_L(r) over
    the scanned window L in [r, 4r].
    """

    r: float
    Lstar: float
    t_L: float
    s_L: float
    a_r: float
    b_r: float
    sign_changes: int


def _db_at(L: float, r: float, rtol: float, atol: float) -> float:
    lev = level_from_period(L)
    return float(solve_variational(lev, r, rtol=rtol, atol=atol).db(r))


def cusp_for_radius(
    r: float,
    grid: int = 400,
    L_max_factor: float = 4.0,
    scan_rtol: float = 1e-9,
    rtol: float = 1e-12,
    atol: float = 1e-12,
) -> CuspTrack:
    """Locate the unique cusp parameter L* in (r, r+1) with db_{L*}(r) = 0.

    Scans L over [r, 4r] on a `grid`-point mesh (signs only, at a looser
    integration tolerance) and requires exactly one sign change; the
    root itself is refined at full tolerance.  Raises if the scan finds
    zero or multiple sign changes (reporting all brackets) — the radius
    is below the working threshold.
    """
    if r < 6.0:
        raise ValueError(f"cusp tracking requires r >= 6, got {r}")
    Ls = np.linspace(r + 1e-6, L_max_factor * r, grid)
    vals = np.array([_db_at(float(L), r, scan_rtol, atol) for L in Ls])
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(idx) != 1:
        brackets = [(float(Ls[i]), float(Ls[i + 1])) for i in idx]
        raise ValueError(
            f"expected exactly one sign change of db_L({r}) on [{r}, {L_max_factor * r}], "
            f"found {len(idx)}: {brackets}"
        )
    lo, hi = float(Ls[idx[0]]), float(Ls[idx[0] + 1])
    Lstar = float(brentq(lambda L: _db_at(L, r, rtol, atol), lo, hi, xtol=1e-10))
    up = upsilon(r, Lstar, rtol=rtol, atol=atol)
    a_r, b_r = up["point"]
    if not (a_r > 0.0 and b_r > 0.0 and math.isfinite(a_r) and math.isfinite(b_r)):
        raise ValueError(f"degenerate cusp location {up['point']} at r={r}")
    return CuspTrack(r, Lstar, r, Lstar - r, a_r, b_r, len(idx))


def variation_lemma_checks(
    level: LoopLevel, path: VarPath | None = None, grid: int = 2000
) -> dict[str, dict]:
    """Grid checks of the Y/Z/B variation statements with delta0 = 1/7.

    Returns {name: {'pass': bool, 'value': float}} for:
      bounded:       max(|Y|, |Z|) < 5 on [L-1, L]
      y_end:         Y(L) < -1/7
      y_slope:       Y' = Z < -1/7 on [L-1, L]
      y_prev:        Y(L-1) > 1/7
      y_positive:    Y > 0 on (L/2, L-1]
      z_nonneg:      Z >= 0 on [0, L/2] (1e-9 slack)
      z_single_sign: Z changes sign at most once on [0, L]
      yb_max:        max |Y + B| on [L-1, L] (value only; compare
                     across two levels for the decay trend)
    """
    L = level.period
    if path is None:
        path = solve_variational(level, L)
    delta0 = 1.0 / 7.0

    ts_end = np.linspace(L - 1.0, L, grid // 4)
    Xe, Ye, Ze, Be = path.aux(ts_end)
    ts_mid = np.linspace(0.5 * L + 1e-9, L - 1.0, grid // 2)
    Ym = path.aux(ts_mid)[1]
    ts_first = np.linspace(0.0, 0.5 * L, grid // 2)
    Zf = path.aux(ts_first)[2]
    ts_all = np.linspace(0.0, L, grid)
    Za = path.aux(ts_all)[2]
    sign_changes = int(np.count_nonzero(np.diff(np.sign(Za[np.abs(Za) > 1e-12])) != 0))

    checks = {
        "bounded": (float(max(np.max(np.abs(Ye)), np.max(np.abs(Ze)))), lambda v: v < 5.0),
        "y_end": (float(Ye[-1]), lambda v: v < -delta0),
        "y_slope": (float(np.max(Ze)), lambda v: v < -delta0),
        "y_prev": (float(path.aux(L - 1.0)[1]), lambda v: v > delta0),
        "y_positive": (float(np.min(Ym)), lambda v: v > 0.0),
        "z_nonneg": (float(np.min(Zf)), lambda v: v > -1e-9),
        "z_single_sign": (float(sign_changes), lambda v: v <= 1),
        "yb_max": (float(np.nanmax(np.abs(Ye + Be))), lambda _v: True),
    }
    return {k: {"value": v, "pass": bool(ok(v))} for k, (v, ok) in checks.items()}


def isochron_to_csv(r: float, L_grid, file, rtol: float = 1e-12, atol: float = 1e-12) -> None:
    """Isochronal curve samples as CSV: L,a,b,da,db,slope."""
    file.write("L,a,b,da,db,slope\n")
    for L in L_grid:
        up = upsilon(r, float(L), rtol=rtol, atol=atol)
        row = (*up["point"], *up["velocity"], up["slope"])
        file.write(",".join(f"{v:.17g}" for v in (float(L), *row)) + "\n")


def aux_to_csv(level: LoopLevel, file, samples: int = 801) -> None:
    """Auxiliary ratio trajectories as CSV: t,X,Y,Z,B (B empty where masked)."""
    path = solve_variational(level, level.period)
    ts = np.linspace(0.0, level.period, samples)
    vals = path.aux(ts)
    file.write("t,X,Y,Z,B\n")
    for i, t in enumerate(ts):
        cells = [f"{t:.17g}"] + [
            "" if math.isnan(float(v)) else f"{float(v):.17g}" for v in vals[:, i]
        ]
        file.write(",".join(cells) + "\n")


def cusp_to_csv(tracks, file) -> None:
    """Cusp table as CSV: r,Lstar,a_r,b_r,t_L,s_L."""
    file.write("r,Lstar,a_r,b_r,t_L,s_L\n")
    for c in tracks:
        row = (c.r, c.Lstar, c.a_r, c.b_r, c.t_L, c.s_L)
        file.write(",".join(f"{v:.17g}" for v in row) + "\n")
