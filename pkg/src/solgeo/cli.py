"""Command-line interface: verification suites and dataset emission.

Two entry points:

    solgeo verify --suite {elliptic,flow,symflow,isochron,spheres,all}
    solgeo emit {lambda,isochron,aux,cusp,mesh,raster,bound} --r R --L L

verify runs per-module invariant checks and writes a JSON report with
rows {suite, check, lemma_ref, value, bound, pass}; exit code 0 iff all
checks pass, 1 on any failure, 2 on execution errors.  emit writes
deterministic CSV/JSON datasets plus a manifest with SHA-256 checksums.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import quad

from . import __version__, elliptic, flow, isochron, symflow, spheres
from .flow import level_from_period

SUITES = ("elliptic", "flow", "symflow", "isochron", "spheres")
KINDS = ("lambda", "isochron", "aux", "cusp", "mesh", "raster", "bound")


@dataclass
class RunConfig:
    """Tolerances, resolutions, and output options for a CLI run."""

    ode_abs: float = 1e-12
    ode_rel: float = 1e-12
    root_tol: float = 1e-10
    check_slack: float = 0.0
    mesh_resolution: int = 128
    raster_resolution: int = 512
    grid_points: int = 200
    out_dir: str = "."
    format: str = "csv"
    threads: int = 0

    def __post_init__(self):
        for name in ("ode_abs", "ode_rel", "root_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.check_slack <= 0.5:
            raise ValueError("check_slack must lie in [0, 0.5]")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be 'csv' or 'json', got {self.format!r}")


def _row(suite, check, ref, value, bound, ok):
    return {
        "suite": suite,
        "check": check,
        "lemma_ref": ref,
        "value": float(value),
        "bound": float(bound) if bound is not None else None,
        "pass": bool(ok),
    }


def _suite_elliptic(config: RunConfig) -> list[dict]:
    rows = []
    ms = np.linspace(0.0, 0.99, 34)
    err_k = max(
        abs(
            elliptic.ellip_k(m)
            - quad(lambda t: 1.0 / math.sqrt(1.0 - m * math.sin(t) ** 2), 0.0, math.pi / 2)[0]
        )
        for m in ms
    )
    err_e = max(
        abs(
            elliptic.ellip_e(m)
            - quad(lambda t: math.sqrt(1.0 - m * math.sin(t) ** 2), 0.0, math.pi / 2)[0]
        )
        for m in ms
    )
    rows.append(_row("elliptic", "k-vs-quadrature", "elliptic-integral-defn", err_k, 1e-10, err_k <= 1e-10))
    rows.append(_row("elliptic", "e-vs-quadrature", "elliptic-integral-defn", err_e, 1e-10, err_e <= 1e-10))

    err_agm = max(
        abs(flow.period_from_alpha(a, method="agm") - flow.period_from_alpha(a, method="elliptic"))
        for a in np.linspace(0.05, 1.0 / math.sqrt(2.0), 40)
    )
    rows.append(_row("elliptic", "agm-period-identity", "agm-elliptic-period-identity", err_agm, 1e-12, err_agm <= 1e-12))

    h = 1e-6
    rel = 0.0
    for m in np.linspace(0.1, 0.9, 17):
        fd_k = (elliptic.ellip_k(m + h) - elliptic.ellip_k(m - h)) / (2 * h)
        fd_e = (elliptic.ellip_e(m + h) - elliptic.ellip_e(m - h)) / (2 * h)
        rel = max(rel, abs(elliptic.ellip_k_deriv(m) / fd_k - 1.0), abs(elliptic.ellip_e_deriv(m) / fd_e - 1.0))
    rows.append(_row("elliptic", "derivatives-vs-fd", "elliptic-derivative-formulas", rel, 1e-6, rel <= 1e-6))

    worst = -math.inf
    for m in (1.0 - 1e-3, 1.0 - 1e-6):
        dev, env = elliptic.ellip_k_log_asymptote(m)
        worst = max(worst, dev - env)
    rows.append(_row("elliptic", "log-asymptote-envelope", "k-log-singularity-bound", worst, 0.0, worst <= 0.0))
    return rows


def _suite_flow(config: RunConfig) -> list[dict]:
    rows = []
    err = abs(flow.period_from_alpha(1.0 / math.sqrt(2.0)) - math.pi * math.sqrt(2.0))
    rows.append(_row("flow", "minimal-period", "round-level-period", err, 1e-10, err <= 1e-10))

    dev = abs(flow.period_from_alpha(0.01) + 4.0 * math.log(0.01 / 2.0))
    rows.append(_row("flow", "small-alpha-log-asymptote", "period-log-growth", dev, 0.02, dev <= 0.02))

    rt = max(abs(level_from_period(L).period - L) for L in (8.0, 16.0, 24.0))
    rows.append(_row("flow", "period-round-trip", "period-level-inverse", rt, 1e-9, rt <= 1e-9))

    level = level_from_period(16.0)
    v0 = np.array([level.x0, level.y0, 0.0])
    path = flow.integrate_flow(v0, 2.0 * level.period, rtol=config.ode_rel, atol=config.ode_abs)
    ts = np.linspace(0.0, path.tmax, 2001)
    vs = path.at(ts)
    norm_dev = float(np.max(np.abs(np.sqrt((vs**2).sum(axis=0)) - 1.0)))
    f_dev = float(np.max(np.abs(vs[0] * vs[1] - level.alpha**2)))
    rows.append(_row("flow", "speed-conservation", "flow-norm-invariant", norm_dev, 1e-9, norm_dev <= 1e-9))
    rows.append(_row("flow", "xy-conservation", "flow-level-invariant", f_dev, 1e-9, f_dev <= 1e-9))

    close = float(np.max(np.abs(path.at(level.period) - path.at(0.0))))
    rows.append(_row("flow", "loop-closure", "loop-periodicity", close, 1e-7, close <= 1e-7))

    gp = flow.exp_path(np.array([1.2, 0.4, 0.8]), rtol=config.ode_rel, atol=config.ode_abs)
    ws = gp.state(np.linspace(0.0, 1.0, 201))[:3]
    speed_dev = float(np.max(np.abs(np.sqrt((ws**2).sum(axis=0)) - np.linalg.norm([1.2, 0.4, 0.8]))))
    rows.append(_row("flow", "geodesic-speed", "geodesic-frame-norm", speed_dev, 1e-9, speed_dev <= 1e-9))
    return rows


def _suite_symflow(config: RunConfig) -> list[dict]:
    rows = []
    level = level_from_period(16.0)
    res = symflow.identity_residuals(level, rtol=config.ode_rel, atol=config.ode_abs)
    bounds = {
        "pointwise": 1e-8,
        "ax_integral": 1e-7,
        "by_integral": 1e-7,
        "ratio": 1e-8,
        "endpoint_double": 1e-6,
        "endpoint_half": 1e-6,
    }
    refs = {
        "pointwise": "flowline-linear-identity",
        "ax_integral": "ax-integral-identity",
        "by_integral": "by-integral-identity",
        "ratio": "endpoint-ratio-identity",
        "endpoint_double": "doubling-endpoint-identity",
        "endpoint_half": "half-endpoint-identity",
    }
    for name, bound in bounds.items():
        rows.append(_row("symflow", name, refs[name], res[name], bound, res[name] <= bound))

    pt = symflow.doubling_endpoint(level, level.period / 3.0)
    path = symflow.solve_symmetric(level, level.period, rtol=config.ode_rel, atol=config.ode_abs)
    t = level.period / 3.0
    u_t = np.array([path.x(t), path.y(t), path.z(t)])
    direct = flow.exp_map(t * u_t, rtol=config.ode_rel, atol=config.ode_abs)
    dev = max(abs(direct.x - pt.x), abs(direct.y - pt.y), abs(direct.z - pt.z))
    rows.append(_row("symflow", "doubling-vs-exp", "doubling-lemma-crosscheck", dev, 1e-5, dev <= 1e-5))
    return rows


def _suite_isochron(config: RunConfig) -> list[dict]:
    rows = []
    level = level_from_period(16.0)
    L = level.period
    path = isochron.solve_variational(level, L, rtol=config.ode_rel, atol=config.ode_abs)

    ts = np.linspace(1e-3, L, 1001)
    X, Y, Z, B = path.aux(ts)
    xy_dev = float(np.max(np.abs((X + Y) - (X[0] + Y[0]))))
    rows.append(_row("isochron", "x-plus-y-constant", "ratio-sum-invariant", xy_dev, 1e-7, xy_dev <= 1e-7))

    s = path.state(ts)
    matei3 = float(np.max(np.abs(s[0] * s[9] / 2.0 + s[1] * s[10] / 2.0)))
    rows.append(_row("isochron", "velocity-orthogonality", "velocity-orthogonality-identity", matei3, 1e-7, matei3 <= 1e-7))

    t_L = isochron.vanishing_point(level, path=path, xtol=config.root_tol)
    ok = L - 1.0 < t_L < L
    rows.append(_row("isochron", "vanishing-point-window", "vanishing-point-location", t_L - (L - 1.0), 1.0, ok))

    lvl20 = level_from_period(20.0)
    rep = isochron.aux_report(lvl20)
    full_dev = max(abs(a - b) for a, b in zip(rep["full"], (0.0, -0.5, -1.0, 0.5)))
    half_dev = max(abs(a - b) for a, b in zip(rep["half"], (-0.5, 0.0, 0.5, -0.5)))
    rows.append(_row("isochron", "endpoint-asymptote", "aux-endpoint-asymptotics", full_dev, 0.05, full_dev <= 0.05))
    rows.append(_row("isochron", "midpoint-asymptote", "aux-midpoint-asymptotics", half_dev, 0.05, half_dev <= 0.05))

    for name, chk in isochron.variation_lemma_checks(lvl20).items():
        rows.append(_row("isochron", f"variation-{name}", "variation-statements", chk["value"], None, chk["pass"]))
    return rows


def _suite_spheres(config: RunConfig) -> list[dict]:
    rows = []
    r = 6.0
    mesh = spheres.mesh_sphere(r, config.mesh_resolution)
    if len(mesh.boundary_indices()):
        bdev = float(
            np.max(np.abs(r * flow.mu_array(mesh.units.reshape(-1, 3)[mesh.boundary_indices()]) - math.pi))
        )
    else:
        bdev = 0.0
    rows.append(_row("spheres", "boundary-on-cut-level", "mesh-boundary-snap", bdev, 1e-9, bdev <= 1e-9))

    pa = spheres.projection_area(r, "X", mesh=mesh, raster_resolution=config.raster_resolution)
    rel = abs(pa["area"] / pa["reference"] - 1.0)
    tol = 0.02 + config.check_slack
    rows.append(_row("spheres", "x-shadow-vs-hyperbolic-disk", "shadow-disk-area", rel, tol, rel <= tol))

    theta, bound = spheres.optimize_theta()
    rows.append(_row("spheres", "theta-star-window", "bound-minimizer-location", theta, None, 0.55 < theta < 0.65))
    rows.append(_row("spheres", "limiting-bound-value", "bound-minimum-value", bound, 62.83, abs(bound - 60.944) <= 0.02))

    vol = spheres.volume_region_bound(5.0)
    rows.append(_row("spheres", "volume-closed-form-dominates", "slab-volume-bound", vol["numeric"], vol["closed"], vol["numeric"] <= vol["closed"]))

    om = spheres.omega_region_area(8.0, mesh=None)
    ratio = om["area"] / math.exp(8.0)
    rows.append(_row("spheres", "omega-area-ratio", "shadow-hull-area-bound", ratio, 4.4, ratio < 4.4))
    return rows


_SUITE_FNS = {
    "elliptic": _suite_elliptic,
    "flow": _suite_flow,
    "symflow": _suite_symflow,
    "isochron": _suite_isochron,
    "spheres": _suite_spheres,
}


def run_verify(config: RunConfig, suite: str = "all") -> tuple[int, dict]:
    """Run one or all verification suites and write a JSON report.

    Returns (exit_code, report): 0 iff every check passed, 1 otherwise.
    Unknown suite names raise ValueError (mapped to exit 2 in main).
    """
    if suite == "all":
        names = list(SUITES)
    elif suite in _SUITE_FNS:
        names = [suite]
    else:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES + ('all',)}")
    rows = []
    for name in names:
        rows.extend(_SUITE_FNS[name](config))
    rows.sort(key=lambda row: (row["suite"], row["check"]))
    report = {
        "tool": "solgeo",
        "version": __version__,
        "config": asdict(config),
        "checks": rows,
        "pass": all(row["pass"] for row in rows),
    }
    os.makedirs(config.out_dir, exist_ok=True)
    out_path = os.path.join(config.out_dir, "verify_report.json")
    with open(out_path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return (0 if report["pass"] else 1), report


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def emit_dataset(kind: str, params: dict, config: RunConfig) -> list[str]:
    """Write the dataset for `kind` plus a checksum manifest.

    params: r and/or L as required by the kind; resolution where a mesh
    is involved.  Returns the list of written file paths (manifest last).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}; expected one of {KINDS}")
    os.makedirs(config.out_dir, exist_ok=True)
    rtol, atol = config.ode_rel, config.ode_abs
    files = []
    extra_manifest = {}

    def out(name):
        path = os.path.join(config.out_dir, name)
        files.append(path)
        return path

    if kind == "lambda":
        L = float(params["L"])
        level = level_from_period(L)
        path = symflow.solve_symmetric(level, 2.0 * L, rtol=rtol, atol=atol)
        with open(out(f"lambda_L{L:g}.csv"), "w") as fh:
            symflow.trajectory_to_csv(path, fh)
    elif kind == "isochron":
        r = float(params["r"])
        grid = np.linspace(r, 8.0 * r, config.grid_points)
        with open(out(f"isochron_r{r:g}.csv"), "w") as fh:
            isochron.isochron_to_csv(r, grid, fh, rtol=rtol, atol=atol)
    elif kind == "aux":
        L = float(params["L"])
        level = level_from_period(L)
        with open(out(f"aux_L{L:g}.csv"), "w") as fh:
            isochron.aux_to_csv(level, fh)
        path = isochron.solve_variational(level, L, rtol=rtol, atol=atol)
        ts = np.linspace(1e-3, L, 801)
        aux = path.aux(ts)
        extra_manifest["ranges"] = {
            name: [float(np.nanmin(v)), float(np.nanmax(v))]
            for name, v in zip("XYZB", aux)
        }
    elif kind == "cusp":
        r = float(params["r"])
        track = isochron.cusp_for_radius(r, rtol=rtol, atol=atol)
        with open(out(f"cusp_r{r:g}.csv"), "w") as fh:
            isochron.cusp_to_csv([track], fh)
    elif kind == "mesh":
        r = float(params["r"])
        mesh = spheres.mesh_sphere(r, config.mesh_resolution)
        if config.format == "json":
            with open(out(f"mesh_r{r:g}.json"), "w") as fh:
                spheres.mesh_to_json(mesh, fh)
        else:
            with open(out(f"mesh_r{r:g}.obj"), "w") as fh:
                spheres.mesh_to_obj(mesh, fh)
    elif kind == "raster":
        r = float(params["r"])
        raster = spheres.multiplicity(
            r, "Z", resolution=config.mesh_resolution, raster_resolution=config.raster_resolution
        )
        with open(out(f"raster_Z_r{r:g}.csv"), "w") as fh:
            spheres.raster_to_csv(raster, fh)
    elif kind == "bound":
        r = float(params["r"])
        mesh = spheres.mesh_sphere(r, config.mesh_resolution)
        inputs = {}
        for plane in ("X", "Y"):
            pa = spheres.projection_area(r, plane, mesh=mesh, raster_resolution=config.raster_resolution)
            mp = spheres.multiplicity(r, plane, mesh=mesh, raster_resolution=config.raster_resolution)
            inputs[f"A_{plane}"] = pa["area"]
            inputs[f"N_{plane}"] = mp.N
        mz = spheres.multiplicity(r, "Z", mesh=mesh, raster_resolution=config.raster_resolution)
        inputs["A_Z_by_k"] = mz.areas_by_count
        theta, bound = spheres.optimize_theta(inputs)
        payload = {
            "r": r,
            "theta_star": theta,
            "bound_star": bound,
            "bound_over_exp_r": bound / math.exp(r),
            "inputs": {
                "N_X": inputs["N_X"],
                "A_X": inputs["A_X"],
                "N_Y": inputs["N_Y"],
                "A_Y": inputs["A_Y"],
                "A_Z_by_k": {str(k): v for k, v in sorted(inputs["A_Z_by_k"].items())},
            },
        }
        with open(out(f"bound_r{r:g}.json"), "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")

    manifest = {
        "tool": "solgeo",
        "version": __version__,
        "kind": kind,
        "params": {k: v for k, v in sorted(params.items()) if v is not None},
        **extra_manifest,
        "files": {os.path.basename(p): _sha256(p) for p in files},
    }
    mpath = os.path.join(config.out_dir, f"{kind}_manifest.json")
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files.append(mpath)
    return files


def _apply_threads(threads: int) -> None:
    if threads <= 0:
        return
    import numba

    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solgeo", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol-ode", type=float, default=1e-12, help="ODE rtol/atol")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=0, help="compute threads (0 = default)")
        p.add_argument("--resolution", type=int, default=128, help="mesh resolution")

    pv = sub.add_parser("verify", help="run verification suites")
    common(pv)
    pv.add_argument("--suite", default="all", help="suite name or 'all'")

    pe = sub.add_parser("emit", help="emit a dataset")
    common(pe)
    pe.add_argument("kind", choices=KINDS)
    pe.add_argument("--r", type=float, default=None, help="radius parameter")
    pe.add_argument("--L", type=float, default=None, help="period parameter")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    threads = int(os.environ.get("SOLGEO_THREADS", args.threads))
    try:
        config = RunConfig(
            ode_abs=args.tol_ode,
            ode_rel=args.tol_ode,
            mesh_resolution=args.resolution,
            out_dir=args.out,
            format=args.format,
            threads=threads,
        )
        _apply_threads(config.threads)
        if args.command == "verify":
            code, report = run_verify(config, args.suite)
            failed = [r for r in report["checks"] if not r["pass"]]
            print(f"{len(report['checks']) - len(failed)}/{len(report['checks'])} checks passed")
            for row in failed:
                print(f"FAIL {row['suite']}::{row['check']} value={row['value']:.6g}")
            return code
        params = {"r": args.r, "L": args.L}
        needs = {"lambda": "L", "aux": "L", "isochron": "r", "cusp": "r", "mesh": "r", "raster": "r", "bound": "r"}
        if params[needs[args.kind]] is None:
            raise ValueError(f"dataset kind {args.kind!r} requires --{needs[args.kind]}")
        for path in emit_dataset(args.kind, params, config):
            print(path)
        return 0
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
