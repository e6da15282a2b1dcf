"""Barycentric extension of boundary maps into the interior.

A boundary map plus a reference boundary measure induce, at every interior
point, a weighted family of conjugated tangents; minimizing the associated
exponential-Busemann energies extends the map.  The finite-exponent
extensions interpolate toward the circumcenter extension, and the audits
here check the balance, derivative, comparison, and rigidity statements
that make that limit work.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .barycenter import (
    BUSEMANN_MODE,
    CONTINUATION_PS,
    ObjectiveSpec,
    SolverConfig,
    minimize,
)
from .hyperboloid import (
    BoundaryDirection,
    ModelConfig,
    SpacePoint,
    busemann,
    direction_to,
    dist,
    exp_map,
    log_map,
    minkowski,
    tangent_basis,
)
from .measures import DiscreteMeasure
from .moebius import BoundaryMap, conjugacy_footpoints, geodesic_conjugacy, _require_moebius

BALANCE_TOL = 1e-8
MAIN_INEQ_SLACK = 1e-9
LIPSCHITZ_SLACK = 1e-8
ISOMETRY_TOL = 1e-6
INVERSE_TOL = 1e-6
HULL_SLACK = 1e-9
EPS_ARGMAX = 1e-4
IMAGE_DISTINCT_TOL = 1e-9


@dataclass(frozen=True)
class ExtensionContext:
    """Frozen bundle of the data defining one extension problem."""

    f: BoundaryMap
    base_measure: DiscreteMeasure
    model: ModelConfig = field(default_factory=ModelConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.base_measure.kind != "boundary":
            raise ValueError("base measure must live on the boundary")
        if len(self.base_measure) < 2:
            raise ValueError("base measure needs at least two atoms")
        if self.f.dim != self.base_measure.dim or self.f.dim != self.model.dim:
            raise ValueError("dimension mismatch between map, measure, and model")
        _require_moebius(self.f, "extension context")
        images = self.f.apply_rays(self.base_measure.coords)
        spread = np.max(images, axis=0) - np.min(images, axis=0)
        if np.max(spread) <= IMAGE_DISTINCT_TOL:
            raise ValueError("the map collapses every atom to one direction")


@dataclass(frozen=True)
class BalanceReport:
    """Balance defect of a boundary measure at a point, with the log of the
    exponential-weight normalizer that produced the measure."""

    point: SpacePoint
    residual: float
    normalizer: float

    def __post_init__(self):
        if self.residual < 0.0:
            raise ValueError("residual is a norm, cannot be negative")


@dataclass(frozen=True)
class ArgmaxSet:
    """Atoms within epsilon of the maximal conformal weight for (center,
    candidate), together with the candidate-side image directions."""

    center: SpacePoint
    candidate: SpacePoint
    epsilon: float
    members: list
    image_dirs: np.ndarray

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if not self.members:
            raise ValueError("argmax set cannot be empty")


@dataclass(frozen=True)
class HullCertificate:
    """Outcome of the convex-hull feasibility check at a candidate point."""

    feasible: bool
    weights: np.ndarray
    min_norm: float
    separator: np.ndarray | None


# ---------------------------------------------------------------------------
# conjugated data and conformal weights

def conjugated_measure(ctx, x):
    """The tangent measure of conjugated directions x -> atom under f."""
    tangents = conjugacy_footpoints(ctx.f, x, ctx.base_measure)
    return DiscreteMeasure.from_atoms(tangents, ctx.base_measure.weights)


def conformal_weight(ctx, x, z, xi):
    """log of the derivative of the pushed visual metric of x against the
    visual metric of z, evaluated at f(xi)."""
    y = geodesic_conjugacy(ctx.f, direction_to(x, xi))
    return busemann(z, y.base, ctx.f(xi))


def _image_dirs(ctx, z, rays=None):
    # unit tangents z -> f(atom), one row per atom
    images = ctx.f.apply_rays(ctx.base_measure.coords if rays is None else rays)
    pz = images[:, 0] * z.coords[0] - images[:, 1:] @ z.coords[1:]
    return images / pz[:, None] - z.coords[None, :]


def _source_dirs(ctx, x):
    rays = ctx.base_measure.coords
    px = rays[:, 0] * x.coords[0] - rays[:, 1:] @ x.coords[1:]
    return rays / px[:, None] - x.coords[None, :]


def _minkowski_rows(A, B):
    return -A[:, 0] * B[:, 0] + np.sum(A[:, 1:] * B[:, 1:], axis=1)


# ---------------------------------------------------------------------------
# the extension maps

def extension_result(ctx, x, p):
    """Full solver outcome for the exponent-p extension at x.

    Large finite exponents are reached by warm-started doubling; the
    convergence flag of the returned result is authoritative.
    """
    nu = conjugated_measure(ctx, x)
    cfg = ctx.solver
    if math.isfinite(p) and p > 64.0 and cfg.initial is None:
        stages = [q for q in CONTINUATION_PS if q < p] + [float(p)]
        res = None
        for q in stages:
            res = minimize(ObjectiveSpec(q, BUSEMANN_MODE, nu), cfg)
            cfg = replace(cfg, initial=res.minimizer)
        return res
    return minimize(ObjectiveSpec(p, BUSEMANN_MODE, nu), cfg)


def p_extension(ctx, x, p):
    """The exponent-p barycentric extension evaluated at x."""
    return extension_result(ctx, x, p).minimizer


def circumcenter_extension(ctx, x):
    """The limiting minimax extension evaluated at x.

    The minimax objective depends only on the support of the base measure,
    so the quality of the discrete answer is set by how densely that support
    covers the boundary as seen from x.  A grid that leaves an angular gap
    wider than a half turn around the would-be center lets the discrete
    objective dip below its continuum value and pulls the minimizer into the
    gap; grids of 64 points or more keep points within distance three of the
    grid's basepoint safe.
    """
    return extension_result(ctx, x, math.inf).minimizer


def mu_x_p(ctx, x, p):
    """The reweighted boundary measure seen from x at exponent p, and the
    balance report of its pushforward at the extension point."""
    if not math.isfinite(p):
        raise ValueError("the reweighted measure needs a finite exponent")
    res = extension_result(ctx, x, p)
    z = res.minimizer
    foots = conjugacy_footpoints(ctx.f, x, ctx.base_measure)
    images = ctx.f.apply_rays(ctx.base_measure.coords)
    phis = np.array(
        [
            busemann(z, w.base, BoundaryDirection(images[i]))
            for i, w in enumerate(foots)
        ]
    )
    logits = np.log(ctx.base_measure.weights) + p * phis
    logc = _logsumexp(logits)
    weights = np.exp(logits - logc)
    weights = weights / weights.sum()
    measure = DiscreteMeasure("boundary", ctx.base_measure.coords, weights)
    dirs = _image_dirs(ctx, z)
    r = weights @ dirs
    residual = math.sqrt(max(minkowski(r, r), 0.0))
    return measure, BalanceReport(z, residual, float(logc))


def _logsumexp(a):
    m = float(np.max(a))
    return m + math.log(float(np.sum(np.exp(a - m))))


def balance_residual(nu, z):
    """Norm of the nu-weighted sum of unit tangents z -> atom."""
    if nu.kind != "boundary":
        raise ValueError("balance is defined for boundary measures")
    rays = nu.coords
    pz = rays[:, 0] * z.coords[0] - rays[:, 1:] @ z.coords[1:]
    dirs = rays / pz[:, None] - z.coords[None, :]
    r = nu.weights @ dirs
    return math.sqrt(max(minkowski(r, r), 0.0))


# ---------------------------------------------------------------------------
# argmax sets and hull certificates

def argmax_set(ctx, x, y, epsilon=EPS_ARGMAX):
    """Atoms whose conformal weight at (x, y) is within epsilon of the max."""
    foots = conjugacy_footpoints(ctx.f, x, ctx.base_measure)
    images = ctx.f.apply_rays(ctx.base_measure.coords)
    values = np.array(
        [busemann(y, w.base, BoundaryDirection(images[i])) for i, w in enumerate(foots)]
    )
    cut = float(np.max(values)) - epsilon
    keep = values >= cut
    members = [ctx.base_measure.atom(i) for i in np.flatnonzero(keep)]
    dirs = _image_dirs(ctx, y)[keep]
    return ArgmaxSet(x, y, epsilon, members, dirs)


def _min_norm_point(points, tol=1e-12):
    """Wolfe's nearest-point-in-hull algorithm on Euclidean row vectors.

    Returns the least-norm hull element and its convex weights over the
    input rows.
    """
    m = points.shape[0]
    norms2 = np.einsum("ij,ij->i", points, points)
    S = [int(np.argmin(norms2))]
    lam = np.array([1.0])
    for _ in range(16 * m + 16):
        g = lam @ points[S]
        gg = float(g @ g)
        dots = points @ g
        j = int(np.argmin(dots))
        if dots[j] >= gg - tol * max(1.0, gg) or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            Q = points[S]
            k = len(S)
            M = np.empty((k + 1, k + 1))
            M[0, 0] = 0.0
            M[0, 1:] = 1.0
            M[1:, 0] = 1.0
            M[1:, 1:] = Q @ Q.T
            rhs = np.zeros(k + 1)
            rhs[0] = 1.0
            alpha = np.linalg.lstsq(M, rhs, rcond=None)[0][1:]
            if np.all(alpha >= 1e-12):
                lam = alpha
                break
            neg = alpha < 1e-12
            ratios = lam[neg] / np.maximum(lam[neg] - alpha[neg], 1e-300)
            theta = float(np.clip(np.min(ratios), 0.0, 1.0))
            lam = (1.0 - theta) * lam + theta * alpha
            lam[lam < 1e-12] = 0.0
            keep = lam > 0.0
            if not np.any(keep):
                keep[int(np.argmax(alpha))] = True
            S = [s for s, k_ in zip(S, keep) if k_]
            lam = lam[keep]
            lam = lam / lam.sum()
    g = lam @ points[S]
    full = np.zeros(m)
    full[S] = lam
    return g, full


def hull_certificate(aset):
    """Feasibility of balancing a measure on the argmax directions.

    Feasible: witness convex weights whose direction sum vanishes within
    tolerance.  Infeasible: a separating tangent making a strictly acute
    angle with every member direction.
    """
    E = tangent_basis(aset.candidate)
    J = np.ones(E.shape[1])
    J[0] = -1.0
    coords = aset.image_dirs @ (J[:, None] * E.T)
    g, lam = _min_norm_point(coords)
    nrm = float(np.linalg.norm(g))
    if nrm <= HULL_SLACK:
        return HullCertificate(True, lam, nrm, None)
    return HullCertificate(False, lam, nrm, g @ E)


# ---------------------------------------------------------------------------
# derivative audits

def extension_differential(ctx, x, v, p, h=1e-3):
    """Central-difference differential of the exponent-p extension.

    Returns the base value F_p(x) and DF_p(v) transported to its tangent
    space by the logarithm map.
    """
    v = np.asarray(v, float)
    base = extension_result(ctx, x, p).minimizer
    plus = p_extension(ctx, exp_map(x, h * v), p)
    minus = p_extension(ctx, exp_map(x, -h * v), p)
    return base, (log_map(base, plus) - log_map(base, minus)) / (2.0 * h)


def derivative_identity_residual(ctx, x, v, p, h=1e-3):
    """Relative defect of the implicit-derivative identity at (x, v, p).

    Both sides are assembled from the reweighted measure, the Busemann
    Hessian, and a finite-difference differential; the residual is
    |lhs - rhs| / (1 + |rhs|).
    """
    if not (1e-4 <= h <= 1e-2):
        raise ValueError("step h must lie in [1e-4, 1e-2]")
    base, du = extension_differential(ctx, x, v, p, h)
    measure, _ = mu_x_p(ctx, x, p)
    w = measure.weights
    dirs = _image_dirs(ctx, base)
    edirs = _source_dirs(ctx, x)
    du_norm2 = minkowski(du, du)
    du_dot = _minkowski_rows(dirs, np.broadcast_to(du, dirs.shape))
    v_dot = _minkowski_rows(edirs, np.broadcast_to(np.asarray(v, float), edirs.shape))
    hess = du_norm2 - du_dot**2
    lhs = float(w @ hess + p * w @ du_dot**2)
    rhs = float(p * w @ (du_dot * v_dot))
    return abs(lhs - rhs) / (1.0 + abs(rhs))


# ---------------------------------------------------------------------------
# audit suites

def _audit(name, rows, max_violation, tol):
    return {
        "audit": name,
        "pairs": len(rows),
        "max_violation": float(max_violation),
        "tolerance": float(tol),
        "pass": bool(max_violation <= tol),
        "rows": rows,
    }


def main_inequality_audit(ctx, pairs, p, b=None):
    """Both comparison inequalities for cosh of extension displacements."""
    if b is None:
        b = ctx.model.b
    rows = []
    worst = -math.inf
    for x, y in pairs:
        fx = extension_result(ctx, x, p).minimizer
        fy = extension_result(ctx, y, p).minimizer
        measure, _ = mu_x_p(ctx, x, p)
        images = ctx.f.apply_rays(ctx.base_measure.coords)
        bus = np.array([busemann(fy, fx, BoundaryDirection(r)) for r in images])
        d = dist(fx, fy)
        upper = float(measure.weights @ np.exp(bus))
        lower = float(measure.weights @ np.exp(b * bus))
        v1 = math.cosh(d) - upper
        v2 = lower - math.cosh(b * d)
        worst = max(worst, v1, v2)
        rows.append(
            {
                "distance": d,
                "cosh_distance": math.cosh(d),
                "exp_busemann_mean": upper,
                "curvature_side": lower,
                "violation": max(v1, v2),
            }
        )
    return _audit("main-inequality", rows, worst, MAIN_INEQ_SLACK)


def lipschitz_audit(ctx, pairs, b=None):
    """Contraction ratios of the circumcenter extension at pinching b."""
    if b is None:
        b = ctx.model.b
    rows = []
    worst = -math.inf
    for x, y in pairs:
        fx = circumcenter_extension(ctx, x)
        fy = circumcenter_extension(ctx, y)
        d_src = dist(x, y)
        d_img = dist(fx, fy)
        ratio = math.cosh(d_img) ** b / math.cosh(b * d_src)
        viol = ratio - 1.0
        if b == 1.0:
            # constant curvature leaves no room between the two bounds, so
            # the extension must move distances by at most the solver error
            viol = max(viol, abs(d_img - d_src) - ISOMETRY_TOL)
        worst = max(worst, viol)
        rows.append(
            {
                "source_distance": d_src,
                "image_distance": d_img,
                "ratio": ratio,
                "violation": viol,
            }
        )
    return _audit("lipschitz", rows, worst, LIPSCHITZ_SLACK)


def inverse_consistency(ctx_f, ctx_g, samples):
    """Round-trip error of the two circumcenter extensions."""
    rows = []
    worst = -math.inf
    for x in samples:
        y = circumcenter_extension(ctx_f, x)
        back = circumcenter_extension(ctx_g, y)
        err = dist(back, x)
        worst = max(worst, err)
        rows.append({"round_trip_error": err})
    return _audit("inverse-consistency", rows, worst, INVERSE_TOL)
