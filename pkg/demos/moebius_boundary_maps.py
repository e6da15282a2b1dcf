"""Boundary maps, the cross-ratio gate, and the metric picture.

A Lorentz matrix acts on null rays and preserves cross-ratios exactly; an
angular warp does not, and the deviation is what the library's gate
measures.  The same maps act on the space of visual metrics, where each
interior point reappears as the metric it induces on the boundary.
"""

import numpy as np

from horobary.hyperboloid import SpacePoint, dist, origin
from horobary.measures import uniform_boundary_grid
from horobary.moebius import (
    BoundaryMap,
    MoebiusMetric,
    cross_ratio_deviation,
    dM_distance,
    nearest_visual_projection,
    probe_quadruples,
)
from horobary.sampling import random_lorentz, random_space_point

rng = np.random.default_rng(19)
g = random_lorentz(rng)
f = BoundaryMap("lorentz", g)
quads = probe_quadruples()

print(f"lorentz map deviation   {cross_ratio_deviation(f, quads):.2e}")
for amp in (0.02, 0.1, 0.3):
    warped = BoundaryMap("perturbed", np.eye(3), np.array([amp]))
    print(f"warp amplitude {amp:<4}     {cross_ratio_deviation(warped, quads):.2e}")

# d_M compares two metrics through the sup of the log derivative; between
# visual metrics it reproduces hyperbolic distance up to the ends of a
# sampling grid
x = random_space_point(rng, radius=1.0)
y = random_space_point(rng, radius=1.0)
grid = uniform_boundary_grid(720, origin(2)).coords
print(f"\nd_M between visual metrics {dM_distance(MoebiusMetric(x), MoebiusMetric(y), grid):.6f}")
print(f"hyperbolic distance        {dist(x, y):.6f}")

# pushing a visual metric through a Lorentz map lands exactly on the
# visual metric of the image point; the projection, started a third of a
# unit away, walks back to it
from horobary.barycenter import SolverConfig
from horobary.hyperboloid import exp_map
from horobary.sampling import random_tangent_vector

rho = MoebiusMetric(x, f)
gx = SpacePoint(g @ x.coords)
guess = exp_map(gx, 0.3 * random_tangent_vector(rng, gx))
proj = nearest_visual_projection(rho, cfg=SolverConfig(initial=guess))
print(f"\nnearest visual point off by {dist(proj, gx):.2e}")
