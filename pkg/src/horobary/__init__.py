"""Horospherical barycenters, circumcenters, and boundary-map extensions
on hyperbolic space.

Submodules: hyperboloid (model geometry), measures (discrete measures and
grids), sampling (seeded random elements), barycenter (energy solvers),
moebius (boundary maps and metrics), extension (interior extensions and
audits), cli (command-line driver).
"""

__version__ = "0.1.0"
