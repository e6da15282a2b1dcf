"""Boundary maps, Moebius metrics and their conformal derivatives, the
metric d_M on the Moebius class, and the induced conjugacy of geodesics.

Two map variants exist.  A matrix preserving the Minkowski form acts on
null rays and is genuinely Moebius; a warped variant composes it with a
Fourier reparametrization of the boundary circle and exists to be caught
by the cross-ratio gate, not to be extended.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .hyperboloid import (
    BoundaryDirection,
    SpacePoint,
    boundary_endpoint,
    boundary_geodesic,
    busemann,
    cross_ratio,
    direction_to,
    flip,
    origin,
)
from .measures import DiscreteMeasure, uniform_boundary_grid

LORENTZ_TOL = 1e-10
MOEBIUS_GATE = 1e-6
DERIV_CONDITION_TOL = 1e-8


def _minkowski_J(n):
    J = np.eye(n)
    J[0, 0] = -1.0
    return J


@dataclass(frozen=True)
class BoundaryMap:
    """A boundary correspondence: matrix action on null rays, optionally
    post-composed with an angular warp (dimension 2 only)."""

    variant: str
    matrix: np.ndarray
    warp: np.ndarray | None = field(default=None)

    def __post_init__(self):
        g = np.array(self.matrix, float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 3:
            raise ValueError("matrix must be square, at least 3x3")
        J = _minkowski_J(g.shape[0])
        if np.max(np.abs(g.T @ J @ g - J)) > LORENTZ_TOL:
            raise ValueError("matrix does not preserve the Minkowski form")
        if g[0, 0] <= 0:
            raise ValueError("matrix reverses the time orientation")
        if self.variant == "lorentz":
            if self.warp is not None:
                raise ValueError("lorentz maps carry no warp")
            warp = None
        elif self.variant == "perturbed":
            if g.shape[0] != 3:
                raise ValueError(
                    "warped maps are only defined on the boundary circle; "
                    "in higher dimensions restrict to a planar slice"
                )
            warp = np.asarray(self.warp, float).ravel()
            if warp.size == 0:
                raise ValueError("perturbed map needs warp coefficients")
            orders = np.repeat(np.arange(1, warp.size // 2 + 2), 2)[: warp.size]
            if np.sum(orders * np.abs(warp)) >= 1.0:
                raise ValueError("warp is too strong to stay a bijection")
            warp = warp.copy()
            warp.flags.writeable = False
        else:
            raise ValueError(f"unknown variant {self.variant!r}")
        g.flags.writeable = False
        object.__setattr__(self, "matrix", g)
        object.__setattr__(self, "warp", warp)

    @property
    def dim(self):
        return self.matrix.shape[0] - 1

    @classmethod
    def identity(cls, dim=2):
        return cls("lorentz", np.eye(dim + 1))

    def __call__(self, xi):
        return BoundaryDirection(self.apply_rays(xi.coords[None, :])[0])

    def apply_rays(self, rays):
        """Vectorized forward map on an (m, n+1) array of null rays."""
        out = np.asarray(rays, float) @ self.matrix.T
        out = out / out[:, :1]
        if self.warp is not None:
            theta = np.arctan2(out[:, 2], out[:, 1])
            theta = theta + self._warp_shift(theta)
            out = np.stack([np.ones_like(theta), np.cos(theta), np.sin(theta)], axis=1)
        return out

    def _warp_shift(self, theta):
        shift = np.zeros_like(theta)
        for i, c in enumerate(self.warp):
            k = i // 2 + 1
            shift += c * (np.cos(k * theta) if i % 2 == 0 else np.sin(k * theta))
        return shift

    def inverse(self, xi):
        """Inverse evaluation; exact for the matrix, root-found for the warp."""
        c = xi.coords
        if self.warp is not None:
            target = math.atan2(c[2], c[1])
            amp = float(np.sum(np.abs(self.warp)))

            def h(t):
                return t + float(self._warp_shift(np.array([t]))[0]) - target

            # the warp moves angles by at most amp, and h is increasing
            lo, hi = target - amp - 1e-9, target + amp + 1e-9
            flo, fhi = h(lo), h(hi)
            if flo > 0 or fhi < 0:
                raise ValueError("warp inversion lost its bracket")
            t = brentq(h, lo, hi, xtol=1e-14)
            c = np.array([1.0, math.cos(t), math.sin(t)])
        J = _minkowski_J(self.matrix.shape[0])
        ginv = J @ self.matrix.T @ J
        return BoundaryDirection(ginv @ c)

    def inverse_rays(self, rays):
        if self.warp is not None:
            return np.stack(
                [self.inverse(BoundaryDirection(r)).coords for r in np.asarray(rays, float)]
            )
        J = _minkowski_J(self.matrix.shape[0])
        out = np.asarray(rays, float) @ (J @ self.matrix.T @ J).T
        return out / out[:, :1]


@dataclass(frozen=True)
class MoebiusMetric:
    """A metric in the Moebius class of the visual metrics: either the
    visual metric of a point or the pushforward of one under a map."""

    x: SpacePoint
    f: BoundaryMap | None = field(default=None)

    @property
    def is_visual(self):
        return self.f is None

    def _preimage_rays(self, rays):
        if self.f is None:
            return np.asarray(rays, float)
        return self.f.inverse_rays(rays)


def _rho_pairs(x, rays_a, rays_b):
    """Visual metric of x on paired rows of normalized null-ray arrays.

    The numerator goes through the spatial chord, which needs the leading
    1 normalization and is exactly zero on identical rays.
    """
    delta = rays_a[:, 1:] - rays_b[:, 1:]
    cross = 0.5 * np.sum(delta * delta, axis=1)
    pa = rays_a[:, 0] * x.coords[0] - rays_a[:, 1:] @ x.coords[1:]
    pb = rays_b[:, 0] * x.coords[0] - rays_b[:, 1:] @ x.coords[1:]
    return np.sqrt(cross / (2.0 * pa * pb))


def metric_eval(rho, xi, eta):
    """rho(xi, eta), through stored preimages for a pushforward."""
    return float(
        _eval_pairs(rho, xi.coords[None, :], eta.coords[None, :])[0]
    )


def _eval_pairs(rho, rays_a, rays_b):
    return _rho_pairs(rho.x, rho._preimage_rays(rays_a), rho._preimage_rays(rays_b))


# ---------------------------------------------------------------------------
# cross-ratio gate

def probe_quadruples(dim=2):
    """Deterministic quadruples used to test maps for Moebius-ness."""
    grid = uniform_boundary_grid(12, origin(dim))
    atoms = grid.atoms
    quads = []
    for i in range(3):
        quads.append((atoms[i], atoms[i + 3], atoms[i + 6], atoms[i + 9]))
    for i in range(3):
        quads.append((atoms[i], atoms[i + 1], atoms[i + 5], atoms[i + 8]))
    return quads


def cross_ratio_deviation(f, quadruples):
    """Max over samples of |log CR(f quad) - log CR(quad)|."""
    worst = 0.0
    for quad in quadruples:
        before = math.log(cross_ratio(*quad))
        after = math.log(cross_ratio(*(f(xi) for xi in quad)))
        worst = max(worst, abs(after - before))
    return worst


def _require_moebius(f, context):
    if f is None:
        return
    dev = cross_ratio_deviation(f, probe_quadruples(f.dim))
    if dev > MOEBIUS_GATE:
        raise ValueError(
            f"{context} needs a Moebius map; cross-ratio deviation {dev:.3e} "
            f"exceeds the {MOEBIUS_GATE:g} gate"
        )


# ---------------------------------------------------------------------------
# conformal derivatives and d_M

def _probe_rays(dim):
    return uniform_boundary_grid(8, origin(dim)).coords


def _derivative_on_rays(rho2, rho1, rays):
    """d rho2 / d rho1 at each ray, closed through two auxiliary points.

    The mean-value identity rho2(u,v)^2 = D(u) D(v) rho1(u,v)^2 applied to
    (xi, a), (xi, b), (a, b) eliminates the auxiliary derivatives.
    """
    rays = np.asarray(rays, float)
    dim = rays.shape[1] - 1
    probes = _probe_rays(dim)
    # per ray, the two most separated probes keep every factor of the
    # identity away from zero
    seps = np.stack(
        [
            np.minimum(
                _eval_pairs(rho1, rays, np.broadcast_to(p, rays.shape)),
                _eval_pairs(rho2, rays, np.broadcast_to(p, rays.shape)),
            )
            for p in probes
        ]
    )
    order = np.argsort(-seps, axis=0)
    best = order[:2]
    A = probes[best[0]]
    B = probes[best[1]]
    r2a = _eval_pairs(rho2, rays, A)
    r2b = _eval_pairs(rho2, rays, B)
    r1a = _eval_pairs(rho1, rays, A)
    r1b = _eval_pairs(rho1, rays, B)
    r1ab = _eval_pairs(rho1, A, B)
    r2ab = _eval_pairs(rho2, A, B)
    return (r2a * r2b * r1ab) / (r1a * r1b * r2ab)


def metric_derivative(rho2, rho1, xi):
    """d rho2 / d rho1 at xi; Moebius-ness of any maps involved is gated."""
    if rho2.is_visual and rho1.is_visual:
        return math.exp(busemann(rho1.x, rho2.x, xi))
    _require_moebius(rho2.f, "metric derivative")
    _require_moebius(rho1.f, "metric derivative")
    return float(_derivative_on_rays(rho2, rho1, xi.coords[None, :])[0])


def _dM_on_rays(rho1, rho2, rays):
    if rho1.is_visual and rho2.is_visual:
        logd = np.log(_rho_pairs_derivative_visual(rho1.x, rho2.x, rays))
    else:
        logd = np.log(_derivative_on_rays(rho2, rho1, rays))
    return float(np.max(np.abs(logd)))


def dM_distance(rho1, rho2, grid):
    """Grid-sampled sup of |log d(rho2)/d(rho1)|; the reported value grows
    monotonically under grid refinement."""
    rays = grid.coords if isinstance(grid, DiscreteMeasure) else np.asarray(grid, float)
    if rays.shape[0] == 0:
        raise ValueError("d_M needs a non-empty grid")
    _require_moebius(rho1.f, "d_M")
    _require_moebius(rho2.f, "d_M")
    return _dM_on_rays(rho1, rho2, rays)


def _rho_pairs_derivative_visual(x, y, rays):
    # e^{B(x, y, xi)} rowwise: the pairing ratio needs no probe points
    px = rays[:, 0] * x.coords[0] - rays[:, 1:] @ x.coords[1:]
    py = rays[:, 0] * y.coords[0] - rays[:, 1:] @ y.coords[1:]
    return px / py


# ---------------------------------------------------------------------------
# geodesic conjugacy

def geodesic_conjugacy(f, u):
    """Carry a unit tangent through the boundary map.

    The image lies on the geodesic between the mapped endpoints, at the
    unique point where the conformal derivative of the pushed metric
    against the local visual metric equals 1 in the forward direction.
    """
    _require_moebius(f, "geodesic conjugacy")
    xi_back = boundary_endpoint(flip(u))
    xi_fwd = boundary_endpoint(u)
    f_back = f(xi_back)
    f_fwd = f(xi_fwd)
    pushed = MoebiusMetric(u.base, f)
    ray_fwd = f_fwd.coords[None, :]

    def h(s):
        y = boundary_geodesic(f_back, f_fwd, s).base
        return float(np.log(_derivative_on_rays(pushed, MoebiusMetric(y), ray_fwd)[0]))

    # |root| is at most d_M(pushed metric, visual at s = 0); seed the
    # bracket with a coarse grid estimate of it and expand until the sign
    # changes, in case the grid undershot the sup
    y0 = boundary_geodesic(f_back, f_fwd, 0.0).base
    bound = 1.0 + _dM_on_rays(
        pushed, MoebiusMetric(y0), uniform_boundary_grid(96, origin(u.dim)).coords
    )
    lo, hi = -bound, bound
    flo, fhi = h(lo), h(hi)
    for _ in range(60):
        if flo >= 0.0 >= fhi:
            break
        lo, hi = 2 * lo, 2 * hi
        flo, fhi = h(lo), h(hi)
    else:
        raise ValueError(
            "no sign change while bracketing the derivative condition: "
            f"h({lo:g}) = {flo:g}, h({hi:g}) = {fhi:g}"
        )
    # h is strictly decreasing with slope -1, so the bracket is clean
    s = brentq(h, lo, hi, xtol=1e-13)
    return boundary_geodesic(f_back, f_fwd, s)


def conjugacy_map(f):
    """The conjugacy as a plain callable on unit tangents."""
    return lambda u: geodesic_conjugacy(f, u)


def conjugacy_footpoints(f, x, grid):
    """Base points of the conjugated tangents x -> xi over a boundary grid.

    Uses the exact linearity of the log-derivative along the target
    geodesic: its value at the standard parametrization's origin IS the
    arclength of the root.  Each footpoint is verified against the
    derivative condition, falling back to the bracketed root find.
    """
    _require_moebius(f, "geodesic conjugacy")
    pushed = MoebiusMetric(x, f)
    n = len(grid)
    rays_fwd = grid.coords
    # backward endpoints of the rays x -> xi
    px = rays_fwd[:, 0] * x.coords[0] - rays_fwd[:, 1:] @ x.coords[1:]
    dirs = rays_fwd / px[:, None] - x.coords[None, :]
    back = x.coords[None, :] - dirs
    back = back / back[:, :1]
    # same cancellation as in boundary_endpoint: restore the null cone
    back[:, 1:] /= np.linalg.norm(back[:, 1:], axis=1, keepdims=True)
    fF = f.apply_rays(rays_fwd)
    fB = f.apply_rays(back)
    out = []
    for i in range(n):
        f_fwd = BoundaryDirection(fF[i])
        f_back = BoundaryDirection(fB[i])
        ray = fF[i : i + 1]
        y0 = boundary_geodesic(f_back, f_fwd, 0.0).base
        s = float(np.log(_derivative_on_rays(pushed, MoebiusMetric(y0), ray)[0]))
        w = boundary_geodesic(f_back, f_fwd, s)
        check = float(np.log(_derivative_on_rays(pushed, MoebiusMetric(w.base), ray)[0]))
        if abs(check) > DERIV_CONDITION_TOL:
            w = geodesic_conjugacy(f, direction_to(x, grid.atom(i)))
        out.append(w)
    return out


# ---------------------------------------------------------------------------
# nearest visual metric

def nearest_visual_projection(rho, cfg=None, grid_n=360):
    """The point whose visual metric is d_M-closest to rho.

    Direct derivative-free minimization of z -> d_M(rho, rho_z) sampled on
    a boundary grid.  Nothing here touches the conjugacy machinery, so the
    result stays an independent check of the extension constructions.
    """
    from scipy.optimize import minimize as scipy_minimize

    from .hyperboloid import exp_map, tangent_basis

    _require_moebius(rho.f, "nearest visual projection")
    dim = rho.x.dim
    rays = uniform_boundary_grid(grid_n, origin(dim)).coords

    if cfg is not None and cfg.initial is not None:
        base = cfg.initial
    elif rho.f is not None:
        base = SpacePoint(rho.f.matrix @ rho.x.coords)
    else:
        base = rho.x
    E = tangent_basis(base)

    def objective(v):
        return _dM_on_rays(rho, MoebiusMetric(exp_map(base, v @ E)), rays)

    res = scipy_minimize(
        objective,
        np.zeros(dim),
        method="Nelder-Mead",
        options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 2000, "maxfev": 4000},
    )
    return exp_map(base, res.x @ E)


# ---------------------------------------------------------------------------
# JSON interchange

def map_to_dict(f):
    out = {
        "variant": f.variant,
        "matrix": [[float(f"{v:.17g}") for v in row] for row in f.matrix],
    }
    if f.warp is not None:
        out["warp"] = {"type": "fourier", "coeffs": [float(f"{v:.17g}") for v in f.warp]}
    return out


def map_from_dict(data):
    try:
        variant = data["variant"]
        matrix = np.array(data["matrix"], float)
        warp = None
        if variant == "perturbed":
            w = data["warp"]
            if w.get("type", "fourier") != "fourier":
                raise ValueError(f"unknown warp type {w.get('type')!r}")
            warp = np.array(w["coeffs"], float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed boundary map object: {exc}") from exc
    return BoundaryMap(variant, matrix, warp)
