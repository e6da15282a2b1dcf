"""Finite discrete probability measures on the boundary, unit tangent bundle,
and the space itself.

Measures are stored struct-of-arrays (stacked coordinates plus a weight
vector) so that the solver and audit layers can run vectorized reductions
over atoms.  All pushforwards copy the weight array untouched.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .hyperboloid import (
    BoundaryDirection,
    SpacePoint,
    UnitTangent,
    direction_to,
    tangent_basis,
)

WEIGHT_TOL = 1e-12
COALESCE_TOL = 1e-12

KINDS = ("space", "boundary", "tangent")


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atoms of a single kind, normalized to total mass one.

    coords holds the stacked point (space), ray (boundary), or base-point
    (tangent) coordinates; dirs is present only for tangent measures.
    """

    kind: str
    coords: np.ndarray
    weights: np.ndarray
    dirs: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        coords = np.array(self.coords, float, ndmin=2)
        weights = np.array(self.weights, float).ravel()
        if coords.shape[0] == 0:
            raise ValueError("measure needs at least one atom")
        if weights.shape[0] != coords.shape[0]:
            raise ValueError("weight count does not match atom count")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must sum to 1")
        dirs = self.dirs
        if self.kind == "tangent":
            if dirs is None:
                raise ValueError("tangent measure needs direction vectors")
            dirs = np.array(dirs, float, ndmin=2)
            if dirs.shape != coords.shape:
                raise ValueError("direction array shape mismatch")
        elif dirs is not None:
            raise ValueError("dirs only make sense for tangent measures")
        coords.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "weights", weights)
        if dirs is not None:
            dirs.flags.writeable = False
            object.__setattr__(self, "dirs", dirs)
        for i in range(coords.shape[0]):
            self.atom(i)  # constructor of the element type validates it

    def __len__(self):
        return self.coords.shape[0]

    @property
    def dim(self):
        return self.coords.shape[1] - 1

    def atom(self, i):
        """The i-th support element as its typed object."""
        if self.kind == "space":
            return SpacePoint(self.coords[i])
        if self.kind == "boundary":
            return BoundaryDirection(self.coords[i])
        return UnitTangent(SpacePoint(self.coords[i]), self.dirs[i])

    @property
    def atoms(self):
        return [self.atom(i) for i in range(len(self))]

    @classmethod
    def from_atoms(cls, elements, weights=None):
        """Build from typed elements; uniform weights when none are given."""
        elements = list(elements)
        if not elements:
            raise ValueError("measure needs at least one atom")
        if weights is None:
            weights = np.full(len(elements), 1.0 / len(elements))
        first = elements[0]
        if isinstance(first, SpacePoint):
            kind = "space"
        elif isinstance(first, BoundaryDirection):
            kind = "boundary"
        elif isinstance(first, UnitTangent):
            kind = "tangent"
        else:
            raise TypeError(f"unsupported atom type {type(first).__name__}")
        if any(not isinstance(e, type(first)) for e in elements):
            raise ValueError("atoms must all have the same kind")
        if kind == "tangent":
            coords = np.stack([e.base.coords for e in elements])
            dirs = np.stack([e.dir for e in elements])
            return cls(kind, coords, weights, dirs)
        coords = np.stack([e.coords for e in elements])
        return cls(kind, coords, weights)


def uniform_boundary_grid(n, x):
    """n equally spread boundary directions seen from x, weights 1/n.

    In dimension 2 the directions sit at angles 2 pi k / n in the tangent
    circle at x.  In higher dimensions a Fibonacci-style deterministic
    spiral stands in for the equal-angle grid.
    """
    if n < 2:
        raise ValueError("grid needs at least 2 directions")
    dim = x.dim
    if dim == 2:
        angles = 2.0 * math.pi * np.arange(n) / n
        sphere = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        sphere = _sphere_grid(n, dim)
    basis = tangent_basis(x)
    dirs = sphere @ basis
    rays = dirs + x.coords
    rays = rays / rays[:, :1]
    return DiscreteMeasure("boundary", rays, np.full(n, 1.0 / n))


def _sphere_grid(n, dim):
    """Deterministic low-discrepancy points on S^{dim-1}.

    Golden-spiral construction for S^2; for higher spheres, a Kronecker
    lattice pushed through the inverse Gaussian map (deterministic and
    well spread, which is all the quadrature layer needs).
    """
    if dim == 3:
        k = np.arange(n)
        z = 1.0 - (2.0 * k + 1.0) / n
        phi = k * math.pi * (3.0 - math.sqrt(5.0))
        r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    from scipy.stats import qmc, norm

    eng = qmc.Halton(d=dim, scramble=False)
    u = eng.random(n + 1)[1:]  # drop the degenerate all-zeros first point
    g = norm.ppf(u)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def pushforward_qx(mu, x):
    """Transport a boundary measure to unit tangents at x via direction_to."""
    if mu.kind != "boundary":
        raise ValueError("pushforward_qx expects a boundary measure")
    dirs = np.stack([direction_to(x, mu.atom(i)).dir for i in range(len(mu))])
    coords = np.broadcast_to(x.coords, dirs.shape).copy()
    return DiscreteMeasure("tangent", coords, mu.weights.copy(), dirs)


def flow_project(nu, t):
    """Base points of the time-t geodesic flow of a tangent measure."""
    if nu.kind != "tangent":
        raise ValueError("flow_project expects a tangent measure")
    coords = math.cosh(t) * nu.coords + math.sinh(t) * nu.dirs
    return DiscreteMeasure("space", coords, nu.weights.copy())


def pushforward_map(mu, f):
    """Atomwise image of a boundary measure under a boundary map."""
    if mu.kind != "boundary":
        raise ValueError("pushforward_map expects a boundary measure")
    images = [f(mu.atom(i)) for i in range(len(mu))]
    coords = np.stack([im.coords for im in images])
    return DiscreteMeasure("boundary", coords, mu.weights.copy())


def pushforward_conjugacy(nu, phi):
    """Atomwise image of a tangent measure under a flow conjugacy."""
    if nu.kind != "tangent":
        raise ValueError("pushforward_conjugacy expects a tangent measure")
    images = [phi(nu.atom(i)) for i in range(len(nu))]
    coords = np.stack([im.base.coords for im in images])
    dirs = np.stack([im.dir for im in images])
    return DiscreteMeasure("tangent", coords, nu.weights.copy(), dirs)


def coalesce(mu, tol=COALESCE_TOL):
    """Merge atoms whose positions agree within tol, adding their weights."""
    reps: list[int] = []
    owner = np.empty(len(mu), dtype=int)
    for i in range(len(mu)):
        for j, r in enumerate(reps):
            if _same_atom(mu, i, r, tol):
                owner[i] = j
                break
        else:
            owner[i] = len(reps)
            reps.append(i)
    if len(reps) == len(mu):
        return mu
    weights = np.zeros(len(reps))
    np.add.at(weights, owner, mu.weights)
    coords = mu.coords[reps]
    dirs = mu.dirs[reps] if mu.dirs is not None else None
    return DiscreteMeasure(mu.kind, coords, weights, dirs)


def _same_atom(mu, i, j, tol):
    if np.max(np.abs(mu.coords[i] - mu.coords[j])) > tol:
        return False
    if mu.dirs is not None and np.max(np.abs(mu.dirs[i] - mu.dirs[j])) > tol:
        return False
    return True


# ---------------------------------------------------------------------------
# JSON interchange.  All reals are written with 17 significant digits so a
# round trip reproduces the doubles bit for bit.

def _fmt(v):
    return float(f"{float(v):.17g}")


def measure_to_dict(mu):
    out = []
    for i in range(len(mu)):
        atom = {"coords": [_fmt(c) for c in mu.coords[i]], "weight": _fmt(mu.weights[i])}
        if mu.dirs is not None:
            atom["dir"] = [_fmt(c) for c in mu.dirs[i]]
        out.append(atom)
    return {"kind": mu.kind, "atoms": out}


def measure_from_dict(data):
    try:
        kind = data["kind"]
        atoms = data["atoms"]
        coords = np.array([a["coords"] for a in atoms], float)
        weights = np.array([a["weight"] for a in atoms], float)
        dirs = None
        if kind == "tangent":
            dirs = np.array([a["dir"] for a in atoms], float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed measure object: {exc}") from exc
    return DiscreteMeasure(kind, coords, weights, dirs)


def save_measure(mu, path):
    with open(path, "w") as fh:
        json.dump(measure_to_dict(mu), fh, indent=2)
        fh.write("\n")


def load_measure(path):
    with open(path) as fh:
        return measure_from_dict(json.load(fh))
