#!/usr/bin/env python3
"""Full shadow report for one sphere radius.

Meshes the sphere, rasterizes the three coordinate-plane shadows,
reports multiplicities and weighted areas, and assembles the final
projection bound with the optimal split parameter.
"""

import argparse
import json
import math
import sys

from solgeo import spheres


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", type=float, default=8.0)
    ap.add_argument("--resolution", type=int, default=512)
    ap.add_argument("--raster", type=int, default=1024)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)

    r = args.r
    mesh = spheres.mesh_sphere(r, args.resolution)
    report = {"r": r, "resolution": args.resolution, "raster": args.raster}

    inputs = {"A_Z_by_k": {}}
    for plane in ("X", "Y"):
        pa = spheres.projection_area(r, plane, mesh=mesh, raster_resolution=args.raster)
        mp = spheres.multiplicity(r, plane, mesh=mesh, raster_resolution=args.raster)
        report[plane] = {
            "area": pa["area"],
            "reference": pa["reference"],
            "N": mp.N,
        }
        inputs[f"N_{plane}"] = mp.N
        inputs[f"A_{plane}"] = pa["area"]
    mz = spheres.multiplicity(r, "Z", mesh=mesh, raster_resolution=args.raster)
    report["Z"] = {"N": mz.N, "areas_by_count": mz.areas_by_count}
    inputs["A_Z_by_k"] = mz.areas_by_count

    theta, bound = spheres.optimize_theta(inputs)
    report["theta_star"] = theta
    report["bound"] = bound
    report["bound_over_exp_r"] = bound / math.exp(r)

    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
