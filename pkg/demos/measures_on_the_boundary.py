"""Discrete measures and their pushforwards.

A boundary measure seen from a point becomes a measure on unit tangents;
flowing those tangents outward produces the expanding families whose
barycenters the solver tracks.
"""

import tempfile

import numpy as np

from horobary.hyperboloid import dist, origin
from horobary.measures import (
    flow_project,
    load_measure,
    pushforward_qx,
    save_measure,
    uniform_boundary_grid,
)
from horobary.sampling import random_space_point

o = origin(2)
grid = uniform_boundary_grid(12, o)
print(f"boundary grid: kind={grid.kind}, atoms={len(grid.weights)}, "
      f"total mass={grid.weights.sum():.3f}")

# seen from a different observer the same directions become unit tangents
x = random_space_point(np.random.default_rng(3), radius=1.0)
nu = pushforward_qx(grid, x)
print(f"tangent measure at x: kind={nu.kind}")

# flow each tangent for time t; the footpoints march toward the boundary
for t in (0.5, 2.0, 5.0):
    mu_t = flow_project(nu, t)
    radii = [dist(o, mu_t.atom(i)) for i in range(len(mu_t.weights))]
    print(f"t={t:>4}: footpoint radius {min(radii):.3f} .. {max(radii):.3f}")

# measures serialize with enough digits to round-trip exactly
with tempfile.NamedTemporaryFile(suffix=".json") as handle:
    save_measure(nu, handle.name)
    back = load_measure(handle.name)
print("round trip exact:", np.array_equal(nu.coords, back.coords))
