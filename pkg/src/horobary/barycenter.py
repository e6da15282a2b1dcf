"""Minimizers of the horospherical convex energies: p-barycenters,
circumcenters, and their asymptotic (boundary-data) versions.

Both objective families reduce to the same atom kernel.  With c_i(z) the
Minkowski pairing -<z, a_i> against a fixed vector a_i,

    log cosh d(z, y_i) = log c_i(z)          (a_i the atom point)
    B(z, y_i, xi_i)    = log c_i(z) + const  (a_i the atom's null ray)

so every energy here is a log-sum-exp of log-linear terms.  The gradient is
grad_i = z - a_i / c_i and the Hessian of each term is exactly
metric - grad_i (x) grad_i, which makes damped Newton steps cheap and the
p = infinity polish a small KKT solve.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hyperboloid import SpacePoint, dist, exp_map, minkowski, tangent_basis
from .measures import DiscreteMeasure

COSH_MODE = "cosh-distance"
BUSEMANN_MODE = "exp-busemann"

EPS_ACTIVE = 1e-6       # active-set threshold for the minimax polish
ARMIJO = 1e-4
STEP_CLAMP = 20.0       # keeps cosh of the step length in floating range
ESCAPE_HEIGHT = 1e6     # iterate height where tangent arithmetic degrades;
                        # reached only when the energy is unbounded below
ENDPOINT_TOL = 1e-10
CONTINUATION_PS = tuple(float(2 ** k) for k in range(1, 15))


@dataclass(frozen=True)
class ObjectiveSpec:
    """One convex energy: exponent, atom kernel, and the data measure."""

    exponent: float
    mode: str
    data: DiscreteMeasure

    def __post_init__(self):
        if self.mode not in (COSH_MODE, BUSEMANN_MODE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (self.exponent >= 1.0):
            raise ValueError("exponent must be >= 1")
        want = "space" if self.mode == COSH_MODE else "tangent"
        if self.data.kind != want:
            raise ValueError(f"{self.mode} mode needs a {want} measure")
        if (
            self.mode == BUSEMANN_MODE
            and math.isinf(self.exponent)
            and _endpoints_coincide(self.data)
        ):
            raise ValueError(
                "sup of horospherical displacements needs at least two "
                "distinct endpoint directions"
            )


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float = 1e-10
    max_iters: int = 500
    initial: SpacePoint | None = None

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")


@dataclass(frozen=True)
class SolverResult:
    minimizer: SpacePoint
    value: float
    grad_norm: float
    iterations: int
    converged: bool


def _tangent_rays(mu):
    rays = mu.coords + mu.dirs
    return rays / rays[:, :1]


def _endpoints_coincide(mu, tol=ENDPOINT_TOL):
    rays = _tangent_rays(mu)
    return np.max(np.abs(rays - rays[0])) <= tol


def _atom_kernel(spec):
    """(a_i vectors, additive constants, log weights) for the spec."""
    mu = spec.data
    logw = np.log(mu.weights)
    if spec.mode == COSH_MODE:
        return mu.coords, np.zeros(len(mu)), logw
    rays = _tangent_rays(mu)
    # B(z, y_i, xi_i) = log(-<z, ray_i>) - log(-<y_i, ray_i>)
    base_pairing = mu.coords[:, 0] * rays[:, 0] - (mu.coords[:, 1:] * rays[:, 1:]).sum(1)
    return rays, -np.log(base_pairing), logw


def _pairings(A, z):
    return A[:, 0] * z[0] - A[:, 1:] @ z[1:]


def _lse(a):
    m = np.max(a)
    return m + math.log(np.sum(np.exp(a - m)))


def _objective_value(A, const, logw, p, z):
    c = _pairings(A, z)
    if np.min(c) <= 0.0:
        # rounding artifact of a trial point far outside the working region;
        # an infinite value makes the line search reject it
        return math.inf
    logphi = np.log(c) + const
    if math.isinf(p):
        return float(np.max(logphi))
    return _lse(logw + p * logphi) / p


def evaluate_objective(spec, z):
    """Log-domain energy (1/p) log sum w_i exp(p log phi_i); max at p = inf."""
    A, const, logw = _atom_kernel(spec)
    return _objective_value(A, const, logw, spec.exponent, z.coords)


def _auto_initial(spec):
    mu = spec.data
    s = mu.weights @ mu.coords
    return SpacePoint(s / math.sqrt(-minkowski(s, s)))


def _basis_coords(G_amb, E):
    # Minkowski contraction of ambient gradients against the basis rows
    GJ = G_amb.copy()
    GJ[:, 0] = -GJ[:, 0]
    return GJ @ E.T


def _newton(A, const, logw, p, z, grad_tol, max_iters):
    """Damped Newton descent for finite p.  Returns (z, grad_norm, iters)."""
    n = z.shape[0] - 1
    value = _objective_value(A, const, logw, p, z)
    for it in range(max_iters):
        c = _pairings(A, z)
        logphi = np.log(c) + const
        a = logw + p * logphi
        what = np.exp(a - _lse(a))
        G_amb = z[None, :] - A / c[:, None]
        E = tangent_basis(SpacePoint(z))
        g = _basis_coords(G_amb, E)
        gbar = what @ g
        grad_norm = float(np.linalg.norm(gbar))
        if grad_norm <= grad_tol:
            return z, grad_norm, it
        S = (g * what[:, None]).T @ g
        H = np.eye(n) + (p - 1.0) * S - p * np.outer(gbar, gbar)
        try:
            delta = np.linalg.solve(H, -gbar)
        except np.linalg.LinAlgError:
            delta = -gbar
        slope = float(delta @ gbar)
        if slope >= 0:
            delta, slope = -gbar, -grad_norm**2
        norm = np.linalg.norm(delta)
        if norm > STEP_CLAMP:
            delta *= STEP_CLAMP / norm
            slope *= STEP_CLAMP / norm
        v = delta @ E
        tau = 1.0
        for _ in range(60):
            z_new = exp_map(SpacePoint(z), tau * v).coords
            new_value = _objective_value(A, const, logw, p, z_new)
            if new_value <= value + ARMIJO * tau * slope:
                break
            tau *= 0.5
        else:
            # no representable decrease left; grad criterion decides below
            return z, grad_norm, it + 1
        if z_new[0] > ESCAPE_HEIGHT:
            # running off toward the boundary: no minimum to find
            return z, grad_norm, it + 1
        z, value = z_new, new_value
    c = _pairings(A, z)
    a = logw + p * (np.log(c) + const)
    what = np.exp(a - _lse(a))
    G_amb = z[None, :] - A / c[:, None]
    g = _basis_coords(G_amb, tangent_basis(SpacePoint(z)))
    grad_norm = float(np.linalg.norm(what @ g))
    return z, grad_norm, max_iters


def _polish_minimax(A, const, z, grad_tol, max_iters=100):
    """Active-set KKT Newton for the p = infinity energy max_i log phi_i.

    Stationarity is the subgradient condition: some convex combination of
    the active gradients vanishes.  Unknowns are the tangent step, the
    multipliers on the active set, and the common max value m.
    """
    n = z.shape[0] - 1
    phi = np.log(_pairings(A, z)) + const
    m = float(np.max(phi))
    # cast a wide net at first: the continuation warm start leaves the truly
    # active values spread by ~log(atoms)/p_max, and spurious members exit
    # through negative multipliers
    active = np.flatnonzero(phi >= m - max(EPS_ACTIVE, 1e-3))
    lam = np.full(active.size, 1.0 / active.size)
    iters = 0
    for _ in range(max_iters):
        iters += 1
        c = _pairings(A, z)
        phi = np.log(c) + const
        E = tangent_basis(SpacePoint(z))
        G_amb = z[None, :] - A[active] / c[active, None]
        G = _basis_coords(G_amb, E)
        k = active.size
        r1 = G.T @ lam
        r2 = phi[active] - m
        r3 = lam.sum() - 1.0
        grad_norm = float(np.linalg.norm(r1))
        if grad_norm <= grad_tol and np.max(np.abs(r2)) <= 1e-12 and abs(r3) <= 1e-12:
            # drop any negative-weight stragglers from the certificate
            if k > 1 and np.min(lam) < -1e-12:
                drop = int(np.argmin(lam))
                active = np.delete(active, drop)
                lam = np.delete(lam, drop)
                lam = np.maximum(lam, 0.0)
                lam /= lam.sum()
                continue
            break
        M = lam.sum() * np.eye(n) - (G * lam[:, None]).T @ G
        KKT = np.zeros((n + k + 1, n + k + 1))
        KKT[:n, :n] = M
        KKT[:n, n : n + k] = G.T
        KKT[n : n + k, :n] = G
        KKT[n : n + k, n + k] = -1.0
        KKT[n + k, n : n + k] = 1.0
        rhs = np.concatenate([-r1, -r2, [-r3]])
        sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
        delta, dlam, dm = sol[:n], sol[n : n + k], sol[n + k]
        norm = np.linalg.norm(delta)
        if norm > 1.0:
            # polish steps are corrections; a long one means a misidentified
            # active set, and shrinking it lets the multiplier signs sort it out
            delta /= norm
        z = exp_map(SpacePoint(z), delta @ E).coords
        lam = lam + dlam
        m = m + float(dm)
        if active.size > 1 and np.min(lam) < -1e-12:
            drop = int(np.argmin(lam))
            active = np.delete(active, drop)
            lam = np.delete(lam, drop)
            total = lam.sum()
            lam = np.full(active.size, 1.0 / active.size) if total <= 0 else lam / total
        phi = np.log(_pairings(A, z)) + const
        violators = np.flatnonzero(phi > m + EPS_ACTIVE)
        fresh = np.setdiff1d(violators, active)
        if fresh.size:
            active = np.concatenate([active, fresh])
            lam = np.concatenate([lam, np.zeros(fresh.size)])
            lam = np.maximum(lam, 1e-16)
            lam /= lam.sum()
            m = float(np.max(phi))
    lam = np.maximum(lam, 0.0)
    lam /= lam.sum()
    c = _pairings(A, z)
    G_amb = z[None, :] - A[active] / c[active, None]
    G = _basis_coords(G_amb, tangent_basis(SpacePoint(z)))
    grad_norm = float(np.linalg.norm(G.T @ lam))
    return z, grad_norm, iters


def minimize(spec, cfg=None):
    """Minimize the energy; p = infinity runs warm-started continuation in
    p followed by the active-set polish."""
    cfg = cfg or SolverConfig()
    A, const, logw = _atom_kernel(spec)
    if spec.mode == BUSEMANN_MODE and _endpoints_coincide(spec.data):
        warnings.warn(
            "all endpoint directions coincide; the energy has no minimum",
            stacklevel=2,
        )
    z = (cfg.initial or _auto_initial(spec)).coords
    p = spec.exponent
    if math.isinf(p):
        total = 0
        for pk in CONTINUATION_PS:
            z, _, its = _newton(A, const, logw, pk, z, max(cfg.grad_tol, 1e-9), cfg.max_iters)
            total += its
        z, grad_norm, its = _polish_minimax(A, const, z, cfg.grad_tol)
        total += its
        value = _objective_value(A, const, logw, p, z)
        converged = grad_norm <= EPS_ACTIVE
        return SolverResult(SpacePoint(z), value, grad_norm, total, converged)
    z, grad_norm, its = _newton(A, const, logw, p, z, cfg.grad_tol, cfg.max_iters)
    value = _objective_value(A, const, logw, p, z)
    return SolverResult(SpacePoint(z), value, grad_norm, its, grad_norm <= cfg.grad_tol)


def circumcenter(points, cfg=None):
    """Minimax center of a finite point set."""
    mu = DiscreteMeasure.from_atoms(list(points))
    res = minimize(ObjectiveSpec(math.inf, COSH_MODE, mu), cfg)
    return res.minimizer


def asymptotic_p_barycenter(nu, p, cfg=None):
    """Minimizer of the L^p norm of exp-Busemann weights over nu."""
    res = minimize(ObjectiveSpec(p, BUSEMANN_MODE, nu), cfg)
    return res.minimizer


def asymptotic_circumcenter(atoms, cfg=None):
    """Minimizer of the sup of horospherical displacements over K."""
    nu = atoms if isinstance(atoms, DiscreteMeasure) else DiscreteMeasure.from_atoms(list(atoms))
    res = minimize(ObjectiveSpec(math.inf, BUSEMANN_MODE, nu), cfg)
    return res.minimizer


# ---------------------------------------------------------------------------
# limit experiments

@dataclass(frozen=True)
class ExperimentTable:
    """Rows of (parameter, minimizer coords, distance to limit, diagnostics)."""

    parameter: str
    rows: list = field(default_factory=list)

    def header(self):
        n_coords = len(self.rows[0][1]) if self.rows else 0
        return [self.parameter] + [f"coord_{i}" for i in range(n_coords)] + [
            "distance",
            "grad_norm",
            "iterations",
        ]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            for row in self.rows:
                param, coords, distance, grad_norm, iterations = row
                writer.writerow(
                    [_fmt(param)]
                    + [_fmt(c) for c in coords]
                    + [_fmt(distance), _fmt(grad_norm), str(iterations)]
                )


def _fmt(v):
    if isinstance(v, int):
        return str(v)
    return f"{float(v):.17g}"


def flow_limit_experiment(nu, p, t_schedule, cfg=None):
    """Track the p-barycenter of the flowed measures mu_t toward the
    asymptotic p-barycenter of nu."""
    from .measures import flow_project

    limit = asymptotic_p_barycenter(nu, p, cfg)
    table = ExperimentTable(parameter="t")
    for t in t_schedule:
        mu_t = flow_project(nu, float(t))
        res = minimize(ObjectiveSpec(p, COSH_MODE, mu_t), cfg)
        table.rows.append(
            (
                float(t),
                tuple(res.minimizer.coords),
                dist(res.minimizer, limit),
                res.grad_norm,
                res.iterations,
            )
        )
    return table


def p_limit_experiment(nu, p_schedule=CONTINUATION_PS, cfg=None):
    """Track asymptotic p-barycenters toward the asymptotic circumcenter;
    the final row is the p = infinity minimizer itself."""
    limit = asymptotic_circumcenter(nu, cfg)
    table = ExperimentTable(parameter="p")
    for p in list(p_schedule) + [math.inf]:
        res = minimize(ObjectiveSpec(float(p), BUSEMANN_MODE, nu), cfg)
        table.rows.append(
            (
                float(p),
                tuple(res.minimizer.coords),
                dist(res.minimizer, limit),
                res.grad_norm,
                res.iterations,
            )
        )
    return table
