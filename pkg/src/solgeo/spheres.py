"""Geodesic spheres: meshing, areas, projections, multiplicities, and
the projection-bound assembly.

The distance sphere of radius r is the exponential image of
S_r' = {unit u : mu(r u) <= pi}, the sphere of directions minus four
holes around the short loop levels.  The Klein four-group of reflections
(x, y, z) -> (+/-x, +/-y, z) commutes with the exponential map, so only
the closed positive sector (x, y >= 0) is meshed:

  * the Pi_X / Pi_Y shadows of the four sector images coincide in
    pairs, so projected multiplicities double the per-sector counts;
  * the Pi_Z images of the four sectors lie in the four closed
    quadrants, so per-sector counts are the global counts, and sector
    areas quadruple.

Areas are Riemannian: the sphere area uses numerical frames (central
finite differences of the exponential map along a tangent basis), the
plane shadows use the induced densities e^{z} dy dz, e^{-z} dx dz and
dx dy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import binary_dilation

from . import isochron
from .elliptic import agm
from .flow import exp_map, integrate_flow, level_from_period, mu_array
from .kernels import dexp_batch_rk4, exp_batch_rk4, raster_counts, raster_sheet_counts
from .solcore import slice_halfwidth

__all__ = [
    "SphereMesh",
    "ProjRaster",
    "mesh_sphere",
    "sphere_area",
    "projection_area",
    "multiplicity",
    "omega_region_area",
    "combine_bound",
    "optimize_theta",
    "volume_region_bound",
    "yinyang_curve",
    "cutlocus_checks",
    "mesh_to_json",
    "mesh_to_obj",
    "raster_to_csv",
]

_BOUNDARY_TOL = 1e-10


def _units(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    st, ct = np.sin(theta), np.cos(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1)


def _default_nsteps(r: float) -> int:
    return max(400, int(140 * r))


@dataclass
class SphereMesh:
    """Positive-sector mesh of S_r' and its exponential image.

    Grid axes: theta (polar angle from +z, rows) x phi (azimuth in
    [0, pi/2], columns), each resolution+1 points.  Vertices outside
    S_r' that neighbor an inside vertex are snapped onto the mu = pi
    boundary along a grid edge; `included` marks inside-or-snapped.
    """

    r: float
    resolution: int
    theta: np.ndarray
    phi: np.ndarray
    units: np.ndarray
    inside: np.ndarray
    snapped: np.ndarray
    images: np.ndarray
    nsteps: int
    _frames: np.ndarray | None = field(default=None, repr=False)
    _refine_cache: dict = field(default_factory=dict, repr=False)

    @property
    def included(self) -> np.ndarray:
        return self.inside | self.snapped

    def cell_mask(self) -> np.ndarray:
        """Cells whose four corners are included, at least one strictly inside."""
        inc = self.included
        four = inc[:-1, :-1] & inc[1:, :-1] & inc[1:, 1:] & inc[:-1, 1:]
        ins = self.inside
        some = ins[:-1, :-1] | ins[1:, :-1] | ins[1:, 1:] | ins[:-1, 1:]
        return four & some

    def triangle_indices(self) -> np.ndarray:
        """(T, 3) flat vertex indices; two triangles per valid cell."""
        n1 = self.resolution + 1
        ii, jj = np.nonzero(self.cell_mask())
        v00 = ii * n1 + jj
        v10 = (ii + 1) * n1 + jj
        v11 = (ii + 1) * n1 + jj + 1
        v01 = ii * n1 + jj + 1
        return np.concatenate(
            [np.stack([v00, v10, v11], axis=1), np.stack([v00, v11, v01], axis=1)]
        )

    def projected_triangles(self, plane: str) -> tuple[np.ndarray, np.ndarray]:
        """Triangle vertex coordinates in the given plane, shapes (T, 3)."""
        axes = {"X": (1, 2), "Y": (0, 2), "Z": (0, 1)}[plane]
        flat = self.images.reshape(-1, 3)
        tri = self.triangle_indices()
        return flat[tri][:, :, axes[0]].copy(), flat[tri][:, :, axes[1]].copy()

    def boundary_indices(self) -> np.ndarray:
        return np.nonzero(self.snapped.reshape(-1))[0]

    def frames(self) -> np.ndarray:
        """Image tangent frames per vertex, shape (n+1, n+1, 2, 3).

        frames[..., 0, :] = dE_{r u}[r du/dtheta] and frames[..., 1, :]
        = dE[r du/dphi], via exact batch integration of the variational
        system (no finite-difference cancellation).
        """
        if self._frames is None:
            self._frames = self._compute_frames()
        return self._frames

    def _compute_frames(self) -> np.ndarray:
        n1 = self.resolution + 1
        inc = self.included.reshape(-1)
        th = self.theta.reshape(-1)[inc]
        ph = self.phi.reshape(-1)[inc]
        st, ct = np.sin(th), np.cos(th)
        sp, cp = np.sin(ph), np.cos(ph)
        t_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
        t_phi = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1)
        v = self.r * self.units.reshape(-1, 3)[inc]

        frames = np.zeros((n1 * n1, 2, 3))
        idx = np.nonzero(inc)[0]
        for k, tangent in enumerate((t_theta, t_phi)):
            frames[idx, k] = dexp_batch_rk4(v, self.r * tangent, self.nsteps)
        return frames.reshape(n1, n1, 2, 3)


def mesh_sphere(r: float, resolution: int, nsteps: int | None = None) -> SphereMesh:
    """Mesh the positive sector of S_r' and push it through exp.

    Directions with loop period below r (mu(r u) > pi) are dropped; grid
    edges crossing the mu = pi locus get their outside endpoint snapped
    onto the boundary by bisection (|r mu - pi| <= 1e-10).
    """
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    if r <= 0.0:
        raise ValueError("r must be positive")
    n = resolution
    theta = np.repeat(np.linspace(0.0, math.pi, n + 1)[:, None], n + 1, axis=1)
    phi = np.repeat(np.linspace(0.0, 0.5 * math.pi, n + 1)[None, :], n + 1, axis=0)
    units = _units(theta, phi)
    inside = r * mu_array(units) <= math.pi + 1e-12
    snapped = np.zeros_like(inside)

    def snap(i, j, i_in, j_in):
        lo, hi = 0.0, 1.0  # parameter toward the outside vertex
        t0, p0 = theta[i_in, j_in], phi[i_in, j_in]
        t1, p1 = theta[i, j], phi[i, j]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            u = _units(t0 + mid * (t1 - t0), p0 + mid * (p1 - p0))
            g = r * agm(
                math.sqrt(abs(u[0] * u[1])),
                0.5 * math.sqrt((abs(u[0]) + abs(u[1])) ** 2 + u[2] ** 2),
            ) - math.pi
            if abs(g) <= _BOUNDARY_TOL:
                lo = hi = mid
                break
            if g > 0.0:
                hi = mid
            else:
                lo = mid
        mid = 0.5 * (lo + hi)
        theta[i, j] = t0 + mid * (t1 - t0)
        phi[i, j] = p0 + mid * (p1 - p0)
        units[i, j] = _units(theta[i, j], phi[i, j])
        snapped[i, j] = True

    out_idx = np.nonzero(~inside)
    for i, j in zip(*out_idx):
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ii, jj = i + di, j + dj
            if 0 <= ii <= n and 0 <= jj <= n and inside[ii, jj]:
                snap(i, j, ii, jj)
                break

    if nsteps is None:
        nsteps = _default_nsteps(r)
    included = inside | snapped
    images = np.full((n + 1, n + 1, 3), np.nan)
    flat_inc = included.reshape(-1)
    vecs = r * units.reshape(-1, 3)[flat_inc]
    images.reshape(-1, 3)[flat_inc] = exp_batch_rk4(vecs, nsteps)
    return SphereMesh(r, resolution, theta, phi, units, inside, snapped, images, nsteps)


def _mesh_area(mesh: SphereMesh) -> float:
    """Riemannian area of the full sphere (4 x positive sector)."""
    fr = mesh.frames()
    z = mesh.images[..., 2]
    e2 = np.exp(-2.0 * np.nan_to_num(z))
    f2 = np.exp(2.0 * np.nan_to_num(z))
    f1, f2v = fr[..., 0, :], fr[..., 1, :]

    def dot(a, b):
        return e2 * a[..., 0] * b[..., 0] + f2 * a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]

    gram = np.sqrt(np.maximum(dot(f1, f1) * dot(f2v, f2v) - dot(f1, f2v) ** 2, 0.0))
    cells = mesh.cell_mask()
    # Per-cell parameter extents from the (snapped) corner parameters.
    dth = 0.5 * (
        (mesh.theta[1:, :-1] - mesh.theta[:-1, :-1])
        + (mesh.theta[1:, 1:] - mesh.theta[:-1, 1:])
    )
    dph = 0.5 * (
        (mesh.phi[:-1, 1:] - mesh.phi[:-1, :-1]) + (mesh.phi[1:, 1:] - mesh.phi[1:, :-1])
    )
    corner_mean = 0.25 * (gram[:-1, :-1] + gram[1:, :-1] + gram[1:, 1:] + gram[:-1, 1:])
    return 4.0 * float(np.sum(corner_mean[cells] * dth[cells] * dph[cells]))


def _graded_nodes(n: int, k: float = 3.0):
    """Midpoint nodes on (0, 1) under a tanh-sinh grading with weights.

    The substitution g(x) = (1 + tanh((pi/2) sinh(k (2x - 1)))) / 2
    concentrates nodes double-exponentially at both endpoints; returns
    (g(x_i), g'(x_i) / n) for midpoints x_i.
    """
    x = (np.arange(n) + 0.5) / n
    s = k * (2.0 * x - 1.0)
    lam = 0.5 * math.pi
    g = 0.5 * (1.0 + np.tanh(lam * np.sinh(s)))
    gp = lam * k * np.cosh(s) / np.cosh(lam * np.sinh(s)) ** 2
    return g, gp / n


def _area_quadrature(r: float, n: int, nsteps: int | None = None) -> float:
    """Riemannian sphere area by graded product quadrature.

    The area density spikes to ~e^{2r} in strips of width ~e^{-r}
    around the degenerate arcs x = 0 and y = 0 (where the image
    stretch is purely hyperbolic), so uniform parameter grids cannot
    converge at feasible resolutions; the tanh-sinh grading places
    nodes double-exponentially close to those arcs in both angles.
    Positive sector only (x4); directions outside the mu = pi body are
    dropped by a hard cutoff.
    """
    if nsteps is None:
        nsteps = _default_nsteps(r)
    gt, wt = _graded_nodes(n)
    gp_, wp = _graded_nodes(n)
    theta = math.pi * gt
    phi = 0.5 * math.pi * gp_
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    u = _units(th.reshape(-1), ph.reshape(-1))
    keep = r * mu_array(u) <= math.pi
    v = r * u[keep]
    st = np.sin(th.reshape(-1)[keep])
    ct = np.cos(th.reshape(-1)[keep])
    sp = np.sin(ph.reshape(-1)[keep])
    cp = np.cos(ph.reshape(-1)[keep])
    t_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    t_phi = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1)
    p = exp_batch_rk4(v, nsteps)
    f1 = dexp_batch_rk4(v, r * t_theta, nsteps)
    f2 = dexp_batch_rk4(v, r * t_phi, nsteps)
    z = p[:, 2]
    e2 = np.exp(-2.0 * z)
    F2 = np.exp(2.0 * z)

    def dot(a, b):
        return e2 * a[:, 0] * b[:, 0] + F2 * a[:, 1] * b[:, 1] + a[:, 2] * b[:, 2]

    gram = np.sqrt(np.maximum(dot(f1, f1) * dot(f2, f2) - dot(f1, f2) ** 2, 0.0))
    w = (math.pi * wt)[:, None] * (0.5 * math.pi * wp)[None, :]
    return 4.0 * float(np.sum(gram * w.reshape(-1)[keep]))


def sphere_area(
    r: float,
    resolution: int = 512,
    mesh: SphereMesh | None = None,
    coarse_mesh: SphereMesh | None = None,
) -> dict:
    """Sphere area estimate with a coarse-grid convergence check.

    Uses the graded quadrature (see _area_quadrature); optional meshes
    only supply the fine/coarse node counts.  Returns {'area',
    'coarse_area', 'rel_change', 'converged'}; the estimate is
    converged when halving the node count moves it < 1%.
    """
    fine_n = mesh.resolution if mesh is not None else resolution
    coarse_n = coarse_mesh.resolution if coarse_mesh is not None else max(64, fine_n // 2)
    fine = _area_quadrature(r, fine_n)
    coarse = _area_quadrature(r, coarse_n)
    rel = abs(fine - coarse) / fine
    return {"area": fine, "coarse_area": coarse, "rel_change": rel, "converged": rel < 0.01}


@dataclass
class ProjRaster:
    """Multiplicity raster of one coordinate-plane shadow.

    counts are per-sector triangle cover counts on the positive-sector
    window; N folds in the sector symmetry (x2 for X/Y whose sector
    shadows coincide, x1 for Z whose sector shadows are disjoint).
    areas_by_count maps count k to the full-sphere area of the k-times
    covered cells (Euclidean in the plane coordinates).
    """

    plane: str
    origin: tuple[float, float]
    cell: tuple[float, float]
    counts: np.ndarray
    excluded: np.ndarray
    N_sector: int
    N: int
    areas_by_count: dict[int, float]


def _raster_extent(r: float, plane: str, resolution: int, window: float | None):
    reach = 1.02 * slice_halfwidth(r)
    if plane == "Z":
        w = window if window is not None else math.exp(0.5 * r)
        return (0.0, 0.0), (w / resolution, w / resolution)
    zmax = 1.02 * r
    return (0.0, -zmax), (reach / resolution, 2.0 * zmax / resolution)


def _refined_triangles(
    mesh: SphereMesh,
    plane: str,
    origin: tuple[float, float],
    cell: tuple[float, float],
    n: int,
    max_len_px: float = 4.0,
    max_depth: int = 16,
):
    """Adaptively refined projected triangulation of the sector image.

    Near the poles and the sector edges the exponential map stretches a
    single parameter cell across hundreds of raster cells (the image
    y-coordinate grows like e^{|z|}), and filling the straight-edge
    triangle of such a cell blankets shadow area the surface never
    touches.  Cells are therefore split (in theta, phi, or both) until
    every projected edge spans at most max_len_px raster cells, with new
    vertices pushed through the exponential map.  Quads that cannot
    reach the raster window are dropped.

    Returns (tx, ty, lt, lp): triangle vertex coordinates in the plane,
    plus the (theta, phi) parameter centroid of each triangle.
    """
    key = (plane, round(origin[0], 12), round(origin[1], 12), round(cell[0], 12), n, max_len_px)
    if key in mesh._refine_cache:
        return mesh._refine_cache[key]
    axes = {"X": (1, 2), "Y": (0, 2), "Z": (0, 1)}[plane]
    ii, jj = np.nonzero(mesh.cell_mask())
    corners = ((0, 0), (1, 0), (1, 1), (0, 1))
    P = np.stack(
        [
            np.stack([mesh.theta[ii + di, jj + dj], mesh.phi[ii + di, jj + dj]], axis=-1)
            for di, dj in corners
        ],
        axis=1,
    )
    Q = np.stack(
        [mesh.images[ii + di, jj + dj][:, list(axes)] for di, dj in corners], axis=1
    )

    # Raster placement only needs ~raster-cell accuracy, far below the
    # base mesh tolerance, so refinement vertices use a short RK4 run.
    nsteps_r = max(64, int(20 * mesh.r))

    def evaluate(params):
        u = _units(params[:, 0], params[:, 1])
        img = exp_batch_rk4(np.ascontiguousarray(mesh.r * u), nsteps_r)
        return img[:, list(axes)]

    out_tx, out_ty, out_lt, out_lp = [], [], [], []

    def emit(Pq, Qq):
        if len(Pq) == 0:
            return
        for tri in ((0, 1, 2), (0, 2, 3)):
            out_tx.append(Qq[:, tri, 0])
            out_ty.append(Qq[:, tri, 1])
        cen = Pq.mean(axis=1)
        out_lt.append(np.tile(cen[:, 0], 2))
        out_lp.append(np.tile(cen[:, 1], 2))

    for depth in range(max_depth + 1):
        if len(P) == 0:
            break
        u0 = (Q[..., 0] - origin[0]) / cell[0]
        u1 = (Q[..., 1] - origin[1]) / cell[1]

        def edge(a, b):
            return np.hypot(u0[:, b] - u0[:, a], u1[:, b] - u1[:, a])

        e_th = np.maximum(edge(0, 1), edge(3, 2))
        e_ph = np.maximum(edge(1, 2), edge(0, 3))
        emax = np.maximum(e_th, e_ph)
        marg = emax + 2.0
        cull = (
            (u0.max(axis=1) < -marg)
            | (u0.min(axis=1) > n + marg)
            | (u1.max(axis=1) < -marg)
            | (u1.min(axis=1) > n + marg)
        )
        done = ~cull & ((emax <= max_len_px) | (depth == max_depth))
        emit(P[done], Q[done])
        sel = ~cull & ~done
        P, Q, e_th, e_ph = P[sel], Q[sel], e_th[sel], e_ph[sel]
        if len(P) == 0:
            break
        split_t = e_th > max_len_px
        split_p = e_ph > max_len_px

        new_params = []
        plans = []  # (kind, P, slices-into-new-points)
        for kind, mask in (
            ("b", split_t & split_p),
            ("t", split_t & ~split_p),
            ("p", ~split_t & split_p),
        ):
            Pk = P[mask]
            Qk = Q[mask]
            if len(Pk) == 0:
                continue
            if kind == "t":
                mids = np.stack([(Pk[:, 0] + Pk[:, 1]) / 2, (Pk[:, 3] + Pk[:, 2]) / 2], axis=1)
            elif kind == "p":
                mids = np.stack([(Pk[:, 1] + Pk[:, 2]) / 2, (Pk[:, 0] + Pk[:, 3]) / 2], axis=1)
            else:
                mids = np.stack(
                    [
                        (Pk[:, 0] + Pk[:, 1]) / 2,
                        (Pk[:, 1] + Pk[:, 2]) / 2,
                        (Pk[:, 3] + Pk[:, 2]) / 2,
                        (Pk[:, 0] + Pk[:, 3]) / 2,
                        Pk.mean(axis=1),
                    ],
                    axis=1,
                )
            plans.append((kind, Pk, Qk, mids))
            new_params.append(mids.reshape(-1, 2))

        new_imgs = evaluate(np.concatenate(new_params))
        pos = 0
        P_next, Q_next = [], []
        for kind, Pk, Qk, mids in plans:
            k = mids.shape[1]
            Mi = new_imgs[pos : pos + len(Pk) * k].reshape(len(Pk), k, 2)
            pos += len(Pk) * k
            if kind == "t":
                m01, m32 = mids[:, 0], mids[:, 1]
                i01, i32 = Mi[:, 0], Mi[:, 1]
                P_next.append(np.stack([Pk[:, 0], m01, m32, Pk[:, 3]], axis=1))
                Q_next.append(np.stack([Qk[:, 0], i01, i32, Qk[:, 3]], axis=1))
                P_next.append(np.stack([m01, Pk[:, 1], Pk[:, 2], m32], axis=1))
                Q_next.append(np.stack([i01, Qk[:, 1], Qk[:, 2], i32], axis=1))
            elif kind == "p":
                m12, m03 = mids[:, 0], mids[:, 1]
                i12, i03 = Mi[:, 0], Mi[:, 1]
                P_next.append(np.stack([Pk[:, 0], Pk[:, 1], m12, m03], axis=1))
                Q_next.append(np.stack([Qk[:, 0], Qk[:, 1], i12, i03], axis=1))
                P_next.append(np.stack([m03, m12, Pk[:, 2], Pk[:, 3]], axis=1))
                Q_next.append(np.stack([i03, i12, Qk[:, 2], Qk[:, 3]], axis=1))
            else:
                m01, m12, m32, m03, ctr = (mids[:, q] for q in range(5))
                i01, i12, i32, i03, ict = (Mi[:, q] for q in range(5))
                P_next.append(np.stack([Pk[:, 0], m01, ctr, m03], axis=1))
                Q_next.append(np.stack([Qk[:, 0], i01, ict, i03], axis=1))
                P_next.append(np.stack([m01, Pk[:, 1], m12, ctr], axis=1))
                Q_next.append(np.stack([i01, Qk[:, 1], i12, ict], axis=1))
                P_next.append(np.stack([ctr, m12, Pk[:, 2], m32], axis=1))
                Q_next.append(np.stack([ict, i12, Qk[:, 2], i32], axis=1))
                P_next.append(np.stack([m03, ctr, m32, Pk[:, 3]], axis=1))
                Q_next.append(np.stack([i03, ict, i32, Qk[:, 3]], axis=1))
        P = np.concatenate(P_next)
        Q = np.concatenate(Q_next)

    tx = np.ascontiguousarray(np.concatenate(out_tx)) if out_tx else np.zeros((0, 3))
    ty = np.ascontiguousarray(np.concatenate(out_ty)) if out_ty else np.zeros((0, 3))
    lt = np.concatenate(out_lt) if out_lt else np.zeros(0)
    lp = np.concatenate(out_lp) if out_lp else np.zeros(0)
    mesh._refine_cache[key] = (tx, ty, lt, lp)
    return tx, ty, lt, lp


def projection_area(
    r: float,
    plane: str,
    mesh: SphereMesh | None = None,
    resolution: int = 512,
    raster_resolution: int = 1024,
) -> dict:
    """Rasterized shadow area of the sphere in one coordinate plane.

    For X/Y the result carries the Riemannian densities e^{+z} / e^{-z}
    and comes with the hyperbolic-disk reference 2 pi (cosh r - 1); for
    Z the area is Euclidean (reference None).  Sector factors included.
    """
    if plane not in ("X", "Y", "Z"):
        raise ValueError(f"plane must be 'X', 'Y' or 'Z', got {plane!r}")
    if mesh is None:
        mesh = mesh_sphere(r, resolution)
    n = raster_resolution
    if plane == "Z":
        origin = (0.0, 0.0)
        reach = 1.02 * slice_halfwidth(r)
        cell = (reach / n, reach / n)
    else:
        origin, cell = _raster_extent(r, plane, n, None)
    tx, ty, _, _ = _refined_triangles(mesh, plane, origin, cell, n)
    # For X/Y the density e^{|z|} concentrates weight in shadow regions
    # thinner than a raster cell (near |z| = r), so the area integral
    # uses a 4x supersampled coverage grid; cell-center sampling at the
    # base resolution undercounts those cells by a few percent.
    ss = 1 if plane == "Z" else 4
    ne = ss * n
    ce = (cell[0] / ss, cell[1] / ss)
    counts = raster_counts(tx, ty, origin[0], origin[1], ce[0], ce[1], ne, ne)
    covered = counts > 0
    cell_area = ce[0] * ce[1]
    if plane == "Z":
        area = 4.0 * float(np.count_nonzero(covered)) * cell_area
        reference = None
    else:
        zc = origin[1] + (np.arange(ne) + 0.5) * ce[1]
        weight = np.exp(zc if plane == "X" else -zc)
        area = 2.0 * float(np.sum(covered * weight[None, :])) * cell_area
        reference = 2.0 * math.pi * (math.cosh(r) - 1.0)
    return {"plane": plane, "area": area, "reference": reference, "covered_cells": int(np.count_nonzero(covered))}


def _singular_cells(mesh, plane, origin, cell, n, with_isochron):
    """Mask of raster cells touched by images of the singular curves."""
    mask = np.zeros((n, n), bool)
    axes = {"X": (1, 2), "Y": (0, 2), "Z": (0, 1)}[plane]
    pts = mesh.images.reshape(-1, 3)[mesh.boundary_indices()][:, axes]
    if with_isochron:
        r = mesh.r
        extra = []
        for L in np.linspace(max(r, math.pi * math.sqrt(2.0) + 0.05), 4.0 * r, 160):
            if L < r:
                continue
            up = isochron.upsilon(r, float(L), rtol=1e-9, atol=1e-9)
            extra.append(up["point"])
            extra.append(up["point"][::-1])
        if extra:
            pts = np.concatenate([pts, np.asarray(extra)]) if len(pts) else np.asarray(extra)
    if len(pts) == 0:
        return mask
    ix = np.floor((pts[:, 0] - origin[0]) / cell[0]).astype(int)
    iy = np.floor((pts[:, 1] - origin[1]) / cell[1]).astype(int)
    ok = (ix >= 0) & (ix < n) & (iy >= 0) & (iy < n)
    mask[ix[ok], iy[ok]] = True
    return mask


def multiplicity(
    r: float,
    plane: str,
    mesh: SphereMesh | None = None,
    resolution: int = 512,
    raster_resolution: int = 1024,
    window: float | None = None,
) -> ProjRaster:
    """Shadow multiplicity raster for one coordinate plane.

    The reported N is the maximum cell count excluding cells within one
    cell of (a) the raster hull (count boundary), (b) images of the
    singular set (mesh boundary curves; for Z also the isochronal fold
    curve and its reflection), and (c) the window edge.  For the Z plane
    the window defaults to [0, e^{r/2}]^2 per axis, which contains the
    fold tangles (checked against a 4x wider window).
    """
    if plane not in ("X", "Y", "Z"):
        raise ValueError(f"plane must be 'X', 'Y' or 'Z', got {plane!r}")
    if mesh is None:
        mesh = mesh_sphere(r, resolution)
    n = raster_resolution
    origin, cell = _raster_extent(r, plane, n, window)
    # The Z window raster is fine-grained enough that refining to the
    # area-raster edge target triples the triangle count for identical
    # counts; sheet clustering tolerates the coarser slivers there.
    mlp = 8.0 if plane == "Z" else 4.0
    tx, ty, lt, lp = _refined_triangles(mesh, plane, origin, cell, n, max_len_px=mlp)
    # Multiplicity = number of surface sheets over a cell, i.e. covering
    # triangles clustered by mesh parameter (a few base cells apart =
    # same sheet); this keeps overlap slivers between neighboring
    # triangles of one sheet from inflating the count.
    sep_t = 3.0 * math.pi / mesh.resolution
    sep_p = 1.5 * math.pi / mesh.resolution
    counts = raster_sheet_counts(
        tx, ty, lt, lp, origin[0], origin[1], cell[0], cell[1], n, n, sep_t, sep_p
    )
    covered = counts > 0

    struct = np.ones((3, 3), bool)
    hull = covered & binary_dilation(~covered, struct)
    edge = np.zeros_like(covered)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    singular = binary_dilation(
        _singular_cells(mesh, plane, origin, cell, n, with_isochron=(plane == "Z")), struct
    )
    excluded = hull | edge | singular | ~covered
    n_sector = int(counts[~excluded].max()) if np.any(~excluded) else 0
    n_total = n_sector * (2 if plane in ("X", "Y") else 1)

    cell_area = cell[0] * cell[1]
    sector_mult = 2 if plane in ("X", "Y") else 4
    areas = {
        int(k): float(np.count_nonzero(counts == k)) * cell_area * sector_mult
        for k in np.unique(counts[covered])
    }
    return ProjRaster(plane, origin, cell, counts, excluded, n_sector, n_total, areas)


def omega_region_area(r: float, mesh: SphereMesh | None = None, slack: float = 0.10) -> dict:
    """Area of the enclosing region Omega_r for the Z-plane shadow.

    Omega_r is the square [0, x0]^2 (x0 = (2 e^r)^{1/3}) together with
    the two regions under y = sqrt(2 e^r / x) for x in [x0, e^r / 2]
    (and the mirror).  Closed form:

        area = x0^2 + 4 sqrt(2 e^r) (sqrt(e^r / 2) - sqrt(x0)).

    If a mesh is given, containment of all its Z-plane samples in the
    slack-relaxed region is verified, along with the coordinate bound
    max(a, b) < (1/2)(1 + slack) e^r.
    """
    u = math.exp(r)
    x0 = (2.0 * u) ** (1.0 / 3.0)
    area = x0 * x0 + 4.0 * math.sqrt(2.0 * u) * (math.sqrt(0.5 * u) - math.sqrt(x0))
    out = {"area": area, "ratio": area / u, "contained": None, "max_coord_ratio": None}
    if mesh is not None:
        pts = mesh.images.reshape(-1, 3)[mesh.included.reshape(-1)][:, :2]
        a = np.abs(pts[:, 0])
        b = np.abs(pts[:, 1])
        c_slop = 2.0 * (1.0 + slack) * u
        inside_sq = np.maximum(a, b) <= (c_slop) ** (1.0 / 3.0)
        under_curve = np.minimum(a * b * b, a * a * b) <= c_slop
        out["contained"] = bool(np.all(inside_sq | under_curve))
        out["max_coord_ratio"] = float(np.max(np.maximum(a, b)) / u)
        out["coord_ok"] = out["max_coord_ratio"] < 0.5 * (1.0 + slack)
    return out


def combine_bound(inputs: dict, theta: float, eps: float = 0.0) -> float:
    """Projection-bound assembly.

        (N_X A_X + N_Y A_Y) / (theta - eps)
            + sum_k k A_{Z,k} / (sqrt(1 - theta^2) - eps)

    inputs: {'N_X', 'A_X', 'N_Y', 'A_Y', 'A_Z_by_k': {k: area}}.
    """
    if not eps < theta < 1.0:
        raise ValueError(f"theta must lie in (eps, 1), got theta={theta}, eps={eps}")
    root = math.sqrt(1.0 - theta * theta) - eps
    if root <= 0.0:
        raise ValueError("eps too large for this theta")
    hyper = inputs["N_X"] * inputs["A_X"] + inputs["N_Y"] * inputs["A_Y"]
    flat = sum(k * a for k, a in inputs["A_Z_by_k"].items())
    return hyper / (theta - eps) + flat / root


def optimize_theta(inputs: dict | None = None, eps: float = 0.0) -> tuple[float, float]:
    """Minimize the bound over theta by golden-section search (1e-10).

    With no inputs, minimizes the limiting form 4 pi / theta
    + 32 / sqrt(1 - theta^2) (hyperbolic shadows -> pi e^r each with
    multiplicity 2; flat shadow count-sum -> 32 e^r), whose minimum is
    just under 20 pi.
    """
    if inputs is None:
        f = lambda t: 4.0 * math.pi / t + 32.0 / math.sqrt(1.0 - t * t)
    else:
        f = lambda t: combine_bound(inputs, t, eps)
    # Plain golden-section over the whole admissible interval; the
    # minimizer can sit anywhere in (eps, 1) depending on the inputs.
    lo, hi = eps + 1e-9, 1.0 - 1e-9
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-10:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    t = 0.5 * (a + b)
    return float(t), float(f(t))


def volume_region_bound(r: float) -> dict:
    """Volume of the enclosing slab region for the ball of radius r.

    Region: |z| <= r, |x|, |y| <= e^r + r, (|x| - r)(|y| - r) <= e^r
    where both exceed r.  The three-part decomposition bounds it by
    72 r^2 e^r (two slabs of at most 32 r^2 e^r plus the log part
    8 r e^r log(e^r) = 8 r^2 e^r); the numeric volume integrates the
    defining inequalities directly.
    """
    from scipy.integrate import quad

    u = math.exp(r)

    def width(x):
        if x <= r + 1.0:
            return u + r
        return min(u + r, r + u / (x - r))

    quadrant, _ = quad(width, 0.0, u + r, limit=400)
    numeric = 8.0 * r * quadrant
    log_part, _ = quad(lambda s: 1.0 / s, 1.0, u, limit=400)
    closed = 72.0 * r * r * u
    return {
        "closed": closed,
        "numeric": numeric,
        "log_part": 8.0 * r * u * log_part,
        "log_part_exact": 8.0 * r * r * u,
    }


def yinyang_curve(r: float, samples: int = 50, L_max: float | None = None) -> list[dict]:
    """Sampled fold-locus directions of length r with cross-validation.

    For each parameter L >= r, the direction is the backward flow of
    the period-L seed for time r; its forward flowline returns to the
    z = 0 plane, so eta_Z(exp(r u)) lands on the isochronal curve.
    Each sample reports the direction, the Z-plane point, the residual
    against upsilon(r, L), and the final z of the forward flowline.
    """
    if r < 5.0:
        raise ValueError("yinyang sampling expects r >= 5")
    lo = max(r, math.pi * math.sqrt(2.0) + 1e-3)
    hi = L_max if L_max is not None else 4.0 * r
    out = []
    for L in np.linspace(lo, hi, samples):
        lev = level_from_period(float(L))
        back = integrate_flow(np.array([lev.x0, lev.y0, 0.0]), r, "backward")
        u = back.at(r)
        point = exp_map(r * u)
        up = isochron.upsilon(r, float(L))
        resid = math.hypot(point.x - up["point"][0], point.y - up["point"][1])
        fwd_z = float(integrate_flow(u, r, "forward").at(r)[2])
        out.append(
            {
                "L": float(L),
                "u": tuple(float(c) for c in u),
                "point": (point.x, point.y),
                "residual": resid,
                "z_end": fwd_z,
            }
        )
    return out


def cutlocus_checks(r: float, samples: int = 20) -> dict:
    """Cut-locus identities on the perfect locus of radius r.

    Samples perfect vectors V (length r on the period-r loop level) and
    reports max deviations of: partner coincidence E(x,y,z) = E(x,y,-z),
    image flatness (third coordinate), holonomy constancy of a b across
    the locus, and reciprocity sigma(E(V)) sigma(V) = 1.
    """
    if r <= math.pi * math.sqrt(2.0):
        raise ValueError("no perfect vectors below the minimal period")
    lev = level_from_period(r)
    loop = integrate_flow(np.array([lev.x0, lev.y0, 0.0]), r, "backward")
    partner_max = 0.0
    z_max = 0.0
    prods = []
    sigma_dev = 0.0
    for t in np.linspace(0.0, r, samples, endpoint=False):
        u = loop.at(t)
        e1 = exp_map(r * u)
        e2 = exp_map(r * np.array([u[0], u[1], -u[2]]))
        partner_max = max(
            partner_max, abs(e1.x - e2.x), abs(e1.y - e2.y), abs(e1.z - e2.z)
        )
        z_max = max(z_max, abs(e1.z))
        prods.append(e1.x * e1.y)
        sigma_dev = max(sigma_dev, abs((e1.y / e1.x) * (u[1] / u[0]) - 1.0))
    prods = np.array(prods)
    spread = float((prods.max() - prods.min()) / prods.mean())
    return {
        "partner_max": partner_max,
        "z_max": z_max,
        "holonomy_spread": spread,
        "sigma_max_dev": sigma_dev,
    }


def mesh_to_json(mesh: SphereMesh, file) -> None:
    """JSON export: {r, resolution, vertices, images, boundary}."""
    inc = np.nonzero(mesh.included.reshape(-1))[0]
    remap = {int(v): i for i, v in enumerate(inc)}
    verts = mesh.units.reshape(-1, 3)[inc]
    imgs = mesh.images.reshape(-1, 3)[inc]
    payload = {
        "r": mesh.r,
        "resolution": mesh.resolution,
        "vertices": [[float(c) for c in v] for v in verts],
        "images": [[float(c) for c in v] for v in imgs],
        "boundary": [remap[int(v)] for v in mesh.boundary_indices()],
    }
    json.dump(payload, file, separators=(",", ":"))


def mesh_to_obj(mesh: SphereMesh, file) -> None:
    """Wavefront OBJ export; positions are the exponential images."""
    inc = np.nonzero(mesh.included.reshape(-1))[0]
    remap = np.full(mesh.images.reshape(-1, 3).shape[0], -1, dtype=int)
    remap[inc] = np.arange(len(inc))
    imgs = mesh.images.reshape(-1, 3)[inc]
    for v in imgs:
        file.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
    for tri in mesh.triangle_indices():
        a, b, c = (remap[t] + 1 for t in tri)
        file.write(f"f {a} {b} {c}\n")


def raster_to_csv(raster: ProjRaster, file) -> None:
    """CSV export of the count grid, one raster row per line."""
    file.write(
        f"# plane={raster.plane} origin={raster.origin[0]:.17g},{raster.origin[1]:.17g}"
        f" cell={raster.cell[0]:.17g},{raster.cell[1]:.17g} N={raster.N}\n"
    )
    for row in raster.counts:
        file.write(",".join(str(int(v)) for v in row) + "\n")
