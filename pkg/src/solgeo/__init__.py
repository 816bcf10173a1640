"""solgeo: numerics for the geometry of the Sol group.

Modules:
    elliptic -- complete elliptic integrals via the AGM
    solcore  -- group arithmetic, metric, projections
    flow     -- structure-field flow, loop periods, exponential map
    symflow  -- symmetric flowlines and endpoint identities
    isochron -- variational system, isochronal curves, cusp tracking
    spheres  -- geodesic sphere meshes, shadows, multiplicities, bounds
    cli      -- verification suites and dataset emission
"""

__version__ = "0.1.0"
