"""
Means, minimax centers, and their limits
========================================

The solver minimizes one family of energies: p-th moments of cosh-distance
for measures on points, p-th moments of exponentiated horospherical
displacement for measures on geodesics, and the sup versions at p = inf.
This script walks the exponent upward and then follows the two limit
experiments from the library.
"""

import numpy as np

from horobary.barycenter import (
    BUSEMANN_MODE,
    COSH_MODE,
    ObjectiveSpec,
    circumcenter,
    flow_limit_experiment,
    minimize,
    p_limit_experiment,
)
from horobary.hyperboloid import dist, origin
from horobary.measures import DiscreteMeasure
from horobary.sampling import random_space_point, random_unit_tangent

rng = np.random.default_rng(11)
atoms = [random_space_point(rng, radius=1.2) for _ in range(5)]
weights = rng.uniform(0.2, 1.0, 5)
mu = DiscreteMeasure.from_atoms(atoms, weights / weights.sum())

# the p-mean interpolates between the weighted mean and the minimax center
print("p-means:")
for p in (1.0, 2.0, 8.0, 64.0):
    res = minimize(ObjectiveSpec(p, COSH_MODE, mu))
    print(f"  p={p:>5}: iterations={res.iterations:3d} "
          f"grad={res.grad_norm:.1e} point={np.round(res.minimizer.coords, 4)}")

center = circumcenter(atoms)
print(f"minimax center          point={np.round(center.coords, 4)}")

# a measure on geodesics: flow it outward and watch the finite-time
# barycenters converge to the asymptotic one
nu = DiscreteMeasure.from_atoms([random_unit_tangent(rng, radius=1.0) for _ in range(4)])
table = flow_limit_experiment(nu, 2.0, range(1, 9))
print(f"\nflow limit ({table.parameter} -> distance to asymptotic center):")
for row in table.rows:
    print(f"  t={row[0]:>4.0f}  distance={row[2]:.2e}")

# the exponent ladder for the same measure, ending at the sup energy
table = p_limit_experiment(nu, p_schedule=(2.0, 8.0, 64.0, 1024.0))
print(f"\nexponent ladder ({table.parameter} -> distance to minimax answer):")
for row in table.rows:
    label = "inf" if np.isinf(row[0]) else f"{row[0]:.0f}"
    print(f"  p={label:>5}  distance={row[2]:.2e}")
