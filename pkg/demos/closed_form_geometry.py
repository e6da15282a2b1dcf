"""
Distances, horospheres, and the visual boundary
===============================================

Every closed form in the core module has a defining limit.  This script
computes both sides for a handful of random configurations so the algebra
can be watched agreeing with the geometry.
"""

import numpy as np

from horobary.hyperboloid import (
    busemann,
    cross_ratio,
    dist,
    geodesic_point,
    direction_to,
    gromov_product,
    origin,
    visual_metric,
)
from horobary.sampling import (
    random_boundary_direction,
    random_lorentz,
    random_space_point,
)

rng = np.random.default_rng(7)
x = random_space_point(rng, radius=1.5)
y = random_space_point(rng, radius=1.5)
xi = random_boundary_direction(rng)
eta = random_boundary_direction(rng)

print(f"d(x, y) = {dist(x, y):.6f}")

# the horospherical displacement is a limit of distance differences along
# a ray toward xi; truncating the ray at t = 12 already agrees to ~1e-9
t = 12.0
a = geodesic_point(direction_to(y, xi), t)
print(f"busemann closed form   {busemann(x, y, xi):+.9f}")
print(f"radial difference      {dist(x, a) - t:+.9f}")

# the visual metric is the exponentiated Gromov product
gp = gromov_product(x, xi, eta)
rho = visual_metric(x, xi, eta)
print(f"gromov product {gp:.6f}, visual distance {rho:.6f}, "
      f"exp(-product) {np.exp(-gp):.6f}")

# moving the observer rescales the squared visual metric by the two
# displacement factors; the identity is exact
lhs = visual_metric(y, xi, eta) ** 2
rhs = rho ** 2 * np.exp(busemann(x, y, xi)) * np.exp(busemann(x, y, eta))
print(f"observer change: {lhs:.12f} vs {rhs:.12f}")

# cross-ratios do not see the observer at all, and a Lorentz map
# preserves them to rounding
g = random_lorentz(rng)
quad = [random_boundary_direction(rng) for _ in range(4)]
before = cross_ratio(*quad)
from horobary.moebius import BoundaryMap

f = BoundaryMap("lorentz", g)
after = cross_ratio(*(f(z) for z in quad))
print(f"cross-ratio before {before:.12f}, after Lorentz map {after:.12f}")
