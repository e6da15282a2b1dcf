"""Independent reference computations for pinning expected values.

Everything here goes through defining limits, finite differences, or brute
force on the Poincare disk -- never through the closed forms under test.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from horobary.hyperboloid import (
    SpacePoint,
    direction_to,
    dist,
    exp_map,
    origin,
)

RADIAL_T = 20.0


def _ray_point(base, xi, t):
    """Raw coordinates of the point t units from base toward xi.

    Deliberately bypasses the SpacePoint constraint check: at t ~ 20 the
    coordinates are ~e^t and the quadratic form of the stored doubles is
    only accurate to about ulp(e^{2t}), far coarser than the constructor
    tolerance.  Distances taken below only need the bilinear form, whose
    relative error stays near machine precision.
    """
    u = direction_to(base, xi)
    return np.cosh(t) * u.base.coords + np.sinh(t) * u.dir


def _raw_dist(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    m = a[0] * b[0] - a[1:] @ b[1:]
    return np.arccosh(max(m, 1.0))


def busemann_limit(x, y, xi, t=RADIAL_T):
    """Defining limit d(x, a) - d(y, a) along the ray from y toward xi."""
    a = _ray_point(y, xi, t)
    return _raw_dist(x.coords, a) - t


def gromov_limit(x, xi, eta, t=RADIAL_T):
    """Defining limit (1/2)(d(x,a) + d(x,a') - d(a,a')) along rays from x."""
    a = _ray_point(x, xi, t)
    ap = _ray_point(x, eta, t)
    return 0.5 * (2.0 * t - _raw_dist(a, ap))


def visual_limit(x, xi, eta, t=RADIAL_T):
    return np.exp(-gromov_limit(x, xi, eta, t))


def cross_ratio_limit(xi, xip, eta, etap, t=RADIAL_T, anchor=None):
    """Defining limit exp((1/2)(d(a,b) + d(a',b') - d(a,b') - d(a',b)))."""
    if anchor is None:
        anchor = origin(xi.dim)
    a = _ray_point(anchor, xi, t)
    ap = _ray_point(anchor, xip, t)
    b = _ray_point(anchor, eta, t)
    bp = _ray_point(anchor, etap, t)
    return np.exp(
        0.5 * (_raw_dist(a, b) + _raw_dist(ap, bp) - _raw_dist(a, bp) - _raw_dist(ap, b))
    )


def directional_derivative(f, z, w, h=1e-5):
    """Central difference of a scalar field on the hyperboloid along w."""
    return (f(exp_map(z, h * np.asarray(w))) - f(exp_map(z, -h * np.asarray(w)))) / (2 * h)


def second_derivative(f, z, w, h=1e-3):
    """Second central difference of a scalar field along the geodesic exp_z(tw)."""
    return (f(exp_map(z, h * np.asarray(w))) - 2.0 * f(z) + f(exp_map(z, -h * np.asarray(w)))) / h**2


# ---------------------------------------------------------------------------
# Poincare-disk brute force.  The disk model is an entirely separate route:
# its own distance and horospherical formulas, minimized by exhaustive grid
# search plus local refinement.

def to_disk(x) -> np.ndarray:
    """Hyperboloid coordinates to Poincare-ball coordinates."""
    c = x.coords if hasattr(x, "coords") else np.asarray(x, float)
    return c[1:] / (1.0 + c[0])


def from_disk(q) -> SpacePoint:
    q = np.asarray(q, float)
    s = q @ q
    return SpacePoint(np.concatenate(([(1.0 + s)], 2.0 * q)) / (1.0 - s))


def disk_distance(grid, q):
    """Hyperbolic distance from each grid row to the disk point q."""
    grid = np.asarray(grid, float)
    q = np.asarray(q, float)
    dd = np.sum((grid - q) ** 2, axis=-1)
    den = (1.0 - np.sum(grid**2, axis=-1)) * (1.0 - q @ q)
    return np.arccosh(1.0 + 2.0 * dd / den)


def disk_busemann(grid, q, xi_unit):
    """B(z, q, xi) for each grid row z, via the horospherical potential
    b_xi(z) = log(|xi - z|^2 / (1 - |z|^2)) relative to the disk center."""
    grid = np.asarray(grid, float)
    q = np.asarray(q, float)
    xi_unit = np.asarray(xi_unit, float)
    bz = np.log(np.sum((xi_unit - grid) ** 2, axis=-1) / (1.0 - np.sum(grid**2, axis=-1)))
    bq = np.log(np.sum((xi_unit - q) ** 2) / (1.0 - q @ q))
    return bz - bq


def _square_grid(center, half, step):
    axis = np.arange(-half, half + step / 2, step)
    gx, gy = np.meshgrid(center[0] + axis, center[1] + axis)
    grid = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    return grid[np.sum(grid**2, axis=-1) < 0.96**2]

def grid_minimize(objective, radius=0.92, step=1e-3):
    """argmin over a disk grid of spacing `step`, then two refinement passes.

    `objective` maps an (m, 2) array of disk points to (m,) values.
    Returns the best disk point found.
    """
    best = np.zeros(2)
    half = radius
    for level in range(3):
        grid = _square_grid(best, half, step)
        values = objective(grid)
        best = grid[int(np.argmin(values))]
        half = 3.0 * step
        step = step / 10.0
    return best


def oracle_p_barycenter(atoms, weights, p, step=1e-3):
    """Brute-force minimizer of the log cosh-distance p-mean on the disk."""
    disk_atoms = np.array([to_disk(a) for a in atoms])
    logw = np.log(np.asarray(weights, float))

    def objective(grid):
        phi = np.stack([np.log(np.cosh(disk_distance(grid, a))) for a in disk_atoms])
        return logsumexp(logw[:, None] + p * phi, axis=0) / p

    return from_disk(grid_minimize(objective, step=step))


def oracle_circumcenter(atoms, step=1e-3):
    """Brute-force minimax-distance point on the disk.

    The max-distance landscape is a kinked valley, quadratically flat along
    its floor, so a shrinking-window grid alone can stall several grid cells
    along the valley; a derivative-free simplex started from the grid answer
    finishes the localization.
    """
    from scipy.optimize import minimize as simplex

    disk_atoms = np.array([to_disk(a) for a in atoms])

    def objective(grid):
        return np.max(np.stack([disk_distance(grid, a) for a in disk_atoms]), axis=0)

    coarse = grid_minimize(objective, step=step)

    def single(q):
        if q @ q >= 0.96**2:
            return np.inf
        return float(objective(q[None, :])[0])

    res = simplex(
        single,
        coarse,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000},
    )
    return from_disk(res.x)


def oracle_asymptotic_p_barycenter(bases, xi_units, weights, p, step=1e-3):
    """Brute-force minimizer of the exp-Busemann p-mean on the disk.

    Atoms are geodesics given by a base point and forward ideal endpoint
    (a Euclidean unit vector on the disk boundary).
    """
    disk_bases = np.array([to_disk(y) for y in bases])
    logw = np.log(np.asarray(weights, float))

    def objective(grid):
        phi = np.stack(
            [disk_busemann(grid, y, u) for y, u in zip(disk_bases, xi_units)]
        )
        return logsumexp(logw[:, None] + p * phi, axis=0) / p

    return from_disk(grid_minimize(objective, step=step))
