"""Compiled kernels: batch geodesic integration and triangle rasterization.

Everything here is numba-jitted and operates on flat float64 arrays; the
geometric conventions live in flow.py and spheres.py.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

__all__ = ["exp_batch_rk4", "dexp_batch_rk4", "raster_counts", "raster_sheet_counts"]


@njit(cache=True, fastmath=False)
def _step_rk4(x, y, z, p1, p2, p3, h):
    """One classical RK4 step of the joint geodesic system (6 scalars)."""
    # k1
    e = math.exp(p3)
    k1 = (x * z, -y * z, -x * x + y * y, e * x, y / e, z)
    # k2
    x2 = x + 0.5 * h * k1[0]
    y2 = y + 0.5 * h * k1[1]
    z2 = z + 0.5 * h * k1[2]
    e = math.exp(p3 + 0.5 * h * k1[5])
    k2 = (x2 * z2, -y2 * z2, -x2 * x2 + y2 * y2, e * x2, y2 / e, z2)
    # k3
    x3 = x + 0.5 * h * k2[0]
    y3 = y + 0.5 * h * k2[1]
    z3 = z + 0.5 * h * k2[2]
    e = math.exp(p3 + 0.5 * h * k2[5])
    k3 = (x3 * z3, -y3 * z3, -x3 * x3 + y3 * y3, e * x3, y3 / e, z3)
    # k4
    x4 = x + h * k3[0]
    y4 = y + h * k3[1]
    z4 = z + h * k3[2]
    e = math.exp(p3 + h * k3[5])
    k4 = (x4 * z4, -y4 * z4, -x4 * x4 + y4 * y4, e * x4, y4 / e, z4)
    c = h / 6.0
    return (
        x + c * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
        y + c * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
        z + c * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]),
        p1 + c * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3]),
        p2 + c * (k1[4] + 2.0 * (k2[4] + k3[4]) + k4[4]),
        p3 + c * (k1[5] + 2.0 * (k2[5] + k3[5]) + k4[5]),
    )


@njit(cache=True, parallel=True)
def exp_batch_rk4(vectors: np.ndarray, nsteps: int) -> np.ndarray:
    """Exponential-map endpoints for many initial vectors, shape (n, 3).

    Fixed-step RK4 on the time-1 parametrization (initial frame vector
    = the full vector; the frame field is quadratically homogeneous).
    """
    n = vectors.shape[0]
    out = np.empty((n, 3))
    h = 1.0 / nsteps
    for i in prange(n):
        x = vectors[i, 0]
        y = vectors[i, 1]
        z = vectors[i, 2]
        p1 = 0.0
        p2 = 0.0
        p3 = 0.0
        for _ in range(nsteps):
            x, y, z, p1, p2, p3 = _step_rk4(x, y, z, p1, p2, p3, h)
        out[i, 0] = p1
        out[i, 1] = p2
        out[i, 2] = p3
    return out


@njit(cache=True, fastmath=False)
def _var_rhs12(s, out):
    """RHS of the joint geodesic + variational system (12 scalars)."""
    x, y, z, _p1, _p2, p3 = s[0], s[1], s[2], s[3], s[4], s[5]
    dx, dy, dz, _q1, _q2, dp3 = s[6], s[7], s[8], s[9], s[10], s[11]
    e = math.exp(p3)
    out[0] = x * z
    out[1] = -y * z
    out[2] = y * y - x * x
    out[3] = e * x
    out[4] = y / e
    out[5] = z
    out[6] = dx * z + x * dz
    out[7] = -dy * z - y * dz
    out[8] = 2.0 * (y * dy - x * dx)
    out[9] = e * (dx + x * dp3)
    out[10] = (dy - y * dp3) / e
    out[11] = dz


@njit(cache=True, parallel=True)
def dexp_batch_rk4(vectors: np.ndarray, wvecs: np.ndarray, nsteps: int) -> np.ndarray:
    """Exact differential of the exponential map for many (V, W) pairs.

    Integrates the variational system alongside the geodesic with
    fixed-step RK4; returns the endpoint position perturbations
    d(exp)_V [W] in coordinates, shape (n, 3).  No finite-difference
    cancellation, so accuracy matches the base integration even where
    the coordinate stretch e^{|z|} is large.
    """
    n = vectors.shape[0]
    out = np.empty((n, 3))
    h = 1.0 / nsteps
    for i in prange(n):
        s = np.zeros(12)
        s[0] = vectors[i, 0]
        s[1] = vectors[i, 1]
        s[2] = vectors[i, 2]
        s[6] = wvecs[i, 0]
        s[7] = wvecs[i, 1]
        s[8] = wvecs[i, 2]
        k1 = np.empty(12)
        k2 = np.empty(12)
        k3 = np.empty(12)
        k4 = np.empty(12)
        tmp = np.empty(12)
        for _ in range(nsteps):
            _var_rhs12(s, k1)
            for j in range(12):
                tmp[j] = s[j] + 0.5 * h * k1[j]
            _var_rhs12(tmp, k2)
            for j in range(12):
                tmp[j] = s[j] + 0.5 * h * k2[j]
            _var_rhs12(tmp, k3)
            for j in range(12):
                tmp[j] = s[j] + h * k3[j]
            _var_rhs12(tmp, k4)
            for j in range(12):
                s[j] += (h / 6.0) * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j])
        out[i, 0] = s[9]
        out[i, 1] = s[10]
        out[i, 2] = s[11]
    return out


@njit(cache=True)
def raster_counts(
    tx: np.ndarray,
    ty: np.ndarray,
    ox: float,
    oy: float,
    cx: float,
    cy: float,
    nx: int,
    ny: int,
) -> np.ndarray:
    """Per-cell triangle cover counts on a rectangular grid.

    tx, ty: triangle vertex coordinates, shape (T, 3).  A cell (i, j)
    spans [ox + i cx, ox + (i+1) cx) x [oy + j cy, ...); its count is
    the number of triangles containing the cell center.  Degenerate
    triangles are skipped.
    """
    counts = np.zeros((nx, ny), np.int32)
    for t in range(tx.shape[0]):
        ax, bx, cxx = tx[t, 0], tx[t, 1], tx[t, 2]
        ay, by, cyy = ty[t, 0], ty[t, 1], ty[t, 2]
        area2 = (bx - ax) * (cyy - ay) - (by - ay) * (cxx - ax)
        scale = max(abs(ax), abs(bx), abs(cxx)) + max(abs(ay), abs(by), abs(cyy))
        if abs(area2) <= 1e-14 * scale * scale:
            continue
        s = 1.0 if area2 > 0.0 else -1.0
        xmin = min(ax, min(bx, cxx))
        xmax = max(ax, max(bx, cxx))
        ymin = min(ay, min(by, cyy))
        ymax = max(ay, max(by, cyy))
        i0 = int(math.floor((xmin - ox) / cx - 0.5))
        i1 = int(math.ceil((xmax - ox) / cx - 0.5))
        j0 = int(math.floor((ymin - oy) / cy - 0.5))
        j1 = int(math.ceil((ymax - oy) / cy - 0.5))
        if i0 < 0:
            i0 = 0
        if j0 < 0:
            j0 = 0
        if i1 > nx - 1:
            i1 = nx - 1
        if j1 > ny - 1:
            j1 = ny - 1
        # Edge vectors, oriented counterclockwise.
        e0x, e0y = s * (bx - ax), s * (by - ay)
        e1x, e1y = s * (cxx - bx), s * (cyy - by)
        e2x, e2y = s * (ax - cxx), s * (ay - cyy)
        for i in range(i0, i1 + 1):
            px = ox + (i + 0.5) * cx
            for j in range(j0, j1 + 1):
                py = oy + (j + 0.5) * cy
                # Top-left fill rule: centers exactly on a shared edge
                # belong to exactly one of the two adjacent triangles.
                w0 = e0x * (py - ay) - e0y * (px - ax)
                if w0 < 0.0 or (w0 == 0.0 and not (e0y < 0.0 or (e0y == 0.0 and e0x > 0.0))):
                    continue
                w1 = e1x * (py - by) - e1y * (px - bx)
                if w1 < 0.0 or (w1 == 0.0 and not (e1y < 0.0 or (e1y == 0.0 and e1x > 0.0))):
                    continue
                w2 = e2x * (py - cyy) - e2y * (px - cxx)
                if w2 < 0.0 or (w2 == 0.0 and not (e2y < 0.0 or (e2y == 0.0 and e2x > 0.0))):
                    continue
                counts[i, j] += 1
    return counts


@njit(cache=True)
def raster_sheet_counts(
    tx: np.ndarray,
    ty: np.ndarray,
    lt: np.ndarray,
    lp: np.ndarray,
    ox: float,
    oy: float,
    cx: float,
    cy: float,
    nx: int,
    ny: int,
    sep_t: float,
    sep_p: float,
) -> np.ndarray:
    """Per-cell sheet counts: covering triangles clustered by parameter.

    Each triangle carries a parameter label (lt[t], lp[t]); triangles
    covering the same cell center are merged (single linkage) whenever
    their labels are within (sep_t, sep_p), so slivers of one surface
    sheet never add to the count.  Cover test matches raster_counts.
    """
    counts = np.zeros((nx, ny), np.int32)
    ntri = tx.shape[0]
    keep = np.zeros(ntri, np.uint8)
    sgn = np.zeros(ntri, np.float64)
    lo_i = np.zeros(ntri, np.int32)
    hi_i = np.zeros(ntri, np.int32)
    lo_j = np.zeros(ntri, np.int32)
    hi_j = np.zeros(ntri, np.int32)
    for t in range(ntri):
        ax, bx, cxx = tx[t, 0], tx[t, 1], tx[t, 2]
        ay, by, cyy = ty[t, 0], ty[t, 1], ty[t, 2]
        area2 = (bx - ax) * (cyy - ay) - (by - ay) * (cxx - ax)
        scale = max(abs(ax), abs(bx), abs(cxx)) + max(abs(ay), abs(by), abs(cyy))
        if abs(area2) <= 1e-14 * scale * scale:
            continue
        i0 = int(math.floor((min(ax, min(bx, cxx)) - ox) / cx - 0.5))
        i1 = int(math.ceil((max(ax, max(bx, cxx)) - ox) / cx - 0.5))
        j0 = int(math.floor((min(ay, min(by, cyy)) - oy) / cy - 0.5))
        j1 = int(math.ceil((max(ay, max(by, cyy)) - oy) / cy - 0.5))
        if i0 < 0:
            i0 = 0
        if j0 < 0:
            j0 = 0
        if i1 > nx - 1:
            i1 = nx - 1
        if j1 > ny - 1:
            j1 = ny - 1
        if i0 > i1 or j0 > j1:
            continue
        keep[t] = 1
        sgn[t] = 1.0 if area2 > 0.0 else -1.0
        lo_i[t], hi_i[t], lo_j[t], hi_j[t] = i0, i1, j0, j1

    # Pass 1: raw cover counts to size the per-cell hit lists.
    for t in range(ntri):
        if keep[t] == 0:
            continue
        ax, bx, cxx = tx[t, 0], tx[t, 1], tx[t, 2]
        ay, by, cyy = ty[t, 0], ty[t, 1], ty[t, 2]
        s = sgn[t]
        e0x, e0y = s * (bx - ax), s * (by - ay)
        e1x, e1y = s * (cxx - bx), s * (cyy - by)
        e2x, e2y = s * (ax - cxx), s * (ay - cyy)
        for i in range(lo_i[t], hi_i[t] + 1):
            px = ox + (i + 0.5) * cx
            for j in range(lo_j[t], hi_j[t] + 1):
                py = oy + (j + 0.5) * cy
                w0 = e0x * (py - ay) - e0y * (px - ax)
                if w0 < 0.0 or (w0 == 0.0 and not (e0y < 0.0 or (e0y == 0.0 and e0x > 0.0))):
                    continue
                w1 = e1x * (py - by) - e1y * (px - bx)
                if w1 < 0.0 or (w1 == 0.0 and not (e1y < 0.0 or (e1y == 0.0 and e1x > 0.0))):
                    continue
                w2 = e2x * (py - cyy) - e2y * (px - cxx)
                if w2 < 0.0 or (w2 == 0.0 and not (e2y < 0.0 or (e2y == 0.0 and e2x > 0.0))):
                    continue
                counts[i, j] += 1

    ncell = nx * ny
    offs = np.zeros(ncell + 1, np.int64)
    flat = counts.reshape(ncell)
    for c in range(ncell):
        offs[c + 1] = offs[c] + flat[c]
    total = offs[ncell]
    hit_t = np.empty(total, np.float64)
    hit_p = np.empty(total, np.float64)
    cursor = offs[:ncell].copy()

    # Pass 2: record the parameter label of every covering triangle.
    for t in range(ntri):
        if keep[t] == 0:
            continue
        ax, bx, cxx = tx[t, 0], tx[t, 1], tx[t, 2]
        ay, by, cyy = ty[t, 0], ty[t, 1], ty[t, 2]
        s = sgn[t]
        e0x, e0y = s * (bx - ax), s * (by - ay)
        e1x, e1y = s * (cxx - bx), s * (cyy - by)
        e2x, e2y = s * (ax - cxx), s * (ay - cyy)
        for i in range(lo_i[t], hi_i[t] + 1):
            px = ox + (i + 0.5) * cx
            for j in range(lo_j[t], hi_j[t] + 1):
                py = oy + (j + 0.5) * cy
                w0 = e0x * (py - ay) - e0y * (px - ax)
                if w0 < 0.0 or (w0 == 0.0 and not (e0y < 0.0 or (e0y == 0.0 and e0x > 0.0))):
                    continue
                w1 = e1x * (py - by) - e1y * (px - bx)
                if w1 < 0.0 or (w1 == 0.0 and not (e1y < 0.0 or (e1y == 0.0 and e1x > 0.0))):
                    continue
                w2 = e2x * (py - cyy) - e2y * (px - cxx)
                if w2 < 0.0 or (w2 == 0.0 and not (e2y < 0.0 or (e2y == 0.0 and e2x > 0.0))):
                    continue
                k = cursor[i * ny + j]
                hit_t[k] = lt[t]
                hit_p[k] = lp[t]
                cursor[i * ny + j] = k + 1

    # Pass 3: single-linkage clustering of hit labels, per cell.
    maxk = 0
    for c in range(ncell):
        k = int(offs[c + 1] - offs[c])
        if k > maxk:
            maxk = k
    parent = np.empty(maxk, np.int32) if maxk > 0 else np.empty(1, np.int32)
    sheets = np.zeros((nx, ny), np.int32)
    for c in range(ncell):
        a0 = offs[c]
        k = int(offs[c + 1] - a0)
        if k == 0:
            continue
        for q in range(k):
            parent[q] = q
        for q in range(k):
            # find root of q
            rq = q
            while parent[rq] != rq:
                rq = parent[rq]
            for v in range(q + 1, k):
                if (
                    abs(hit_t[a0 + q] - hit_t[a0 + v]) <= sep_t
                    and abs(hit_p[a0 + q] - hit_p[a0 + v]) <= sep_p
                ):
                    rv = v
                    while parent[rv] != rv:
                        rv = parent[rv]
                    if rv != rq:
                        parent[rv] = rq
        nroot = 0
        for q in range(k):
            if parent[q] == q:
                nroot += 1
        sheets[c // ny, c % ny] = nroot
    return sheets
