"""Command-line driver: seeded experiment and audit runs with JSON/CSV reports.

Configuration comes from an optional JSON file plus flag overrides; every
run writes its reports atomically and exits 0 only when all checks pass,
2 on malformed configuration, 3 on solver non-convergence.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .barycenter import (
    BUSEMANN_MODE,
    COSH_MODE,
    ObjectiveSpec,
    flow_limit_experiment,
    minimize,
    p_limit_experiment,
)
from .extension import (
    ExtensionContext,
    argmax_set,
    circumcenter_extension,
    derivative_identity_residual,
    extension_result,
    hull_certificate,
    inverse_consistency,
    lipschitz_audit,
    main_inequality_audit,
    mu_x_p,
)
from .hyperboloid import ModelConfig, SpacePoint, dist, exp_map, origin, tangent_basis
from .measures import load_measure, pushforward_qx, uniform_boundary_grid
from .moebius import BoundaryMap, cross_ratio_deviation, map_from_dict, probe_quadruples
from .sampling import random_lorentz, random_space_point

COMMANDS = (
    "barycenter",
    "circumcenter",
    "extend",
    "converge-p",
    "converge-flow",
    "audit",
    "verify",
)
DEFAULT_P_SCHEDULE = (1.0, 2.0, 8.0, 64.0)
DEFAULT_T_SCHEDULE = tuple(float(t) for t in range(1, 11))
CONVERGENCE_TOL = 1e-3
NATURALITY_TOL = 1e-6
GATE_FLOOR = 1e-3

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """One experiment run: a command plus its model, inputs, and schedules."""

    command: str
    model: ModelConfig = field(default_factory=ModelConfig)
    inputs: dict = field(default_factory=dict)
    seed: int = 0
    grid_n: int = 64
    p_schedule: tuple = DEFAULT_P_SCHEDULE
    t_schedule: tuple = DEFAULT_T_SCHEDULE
    out: str = "reports"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {COMMANDS}")
        if self.grid_n < 2:
            raise ConfigError("grid_n must be at least 2")
        for name, schedule in (("p_schedule", self.p_schedule), ("t_schedule", self.t_schedule)):
            vals = list(schedule)
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError(f"{name} must be strictly increasing")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")


@dataclass(frozen=True)
class Runtime:
    threads: int = 1
    tolerance_scale: float = 1.0


CONFIG_KEYS = {"command", "model", "inputs", "seed", "grid_n", "p_schedule", "t_schedule", "out"}


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: line {exc.lineno} column {exc.colno}: {exc.msg}")


def _config_from_sources(args):
    raw = {}
    if args.config:
        data = _load_json(args.config)
        if not isinstance(data, dict):
            raise ConfigError(f"config {args.config} must be a JSON object")
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw.update(data)
    if args.command:
        if "command" in raw and raw["command"] != args.command:
            raise ConfigError(
                f"config says command {raw['command']!r} but {args.command!r} was given"
            )
        raw["command"] = args.command
    if "command" not in raw:
        raise ConfigError("no command: pass one as an argument or in the config file")
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.grid is not None:
        raw["grid_n"] = args.grid
    if args.out is not None:
        raw["out"] = args.out
    model = raw.get("model", {})
    if not isinstance(model, dict):
        raise ConfigError("model must be an object with dim and b")
    try:
        raw["model"] = ModelConfig(int(model.get("dim", 2)), float(model.get("b", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"bad model: {exc}")
    for key in ("p_schedule", "t_schedule"):
        if key in raw:
            raw[key] = tuple(float(v) for v in raw[key])
    if "inputs" in raw and not isinstance(raw["inputs"], dict):
        raise ConfigError("inputs must be an object mapping names to file paths")
    return RunConfig(**raw)


def _config_hash(cfg):
    payload = {
        "command": cfg.command,
        "model": {"dim": cfg.model.dim, "b": cfg.model.b},
        "inputs": cfg.inputs,
        "seed": cfg.seed,
        "grid_n": cfg.grid_n,
        "p_schedule": list(cfg.p_schedule),
        "t_schedule": list(cfg.t_schedule),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# report plumbing

def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.17g}")
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    return obj


def _write_atomic(path, text):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _write_json(path, obj):
    _write_atomic(path, json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    _write_atomic(path, "\n".join(lines) + "\n")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _scaled(report, scale):
    tol = report["tolerance"] * scale
    out = dict(report)
    out["tolerance"] = tol
    out["pass"] = report["max_violation"] <= tol
    return out


# ---------------------------------------------------------------------------
# shared inputs

def _input_measure(cfg):
    path = cfg.inputs.get("measure")
    if path is None:
        return None
    return _as_measure(_load_json(path), path)


def _as_measure(data, path):
    from .measures import measure_from_dict

    try:
        return measure_from_dict(data)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")


def _input_map(cfg):
    path = cfg.inputs.get("map")
    if path is None:
        return None
    try:
        return map_from_dict(_load_json(path))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")


def _input_points(cfg):
    path = cfg.inputs.get("points")
    if path is None:
        return None
    data = _load_json(path)
    rows = data.get("points") if isinstance(data, dict) else None
    if rows is None:
        raise ConfigError(f"{path}: expected an object with a 'points' array")
    try:
        return [SpacePoint(np.array(row, float)) for row in rows]
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: bad point row: {exc}")


def _symmetric_tangent_measure(cfg):
    o = origin(cfg.model.dim)
    return pushforward_qx(uniform_boundary_grid(cfg.grid_n, o), o)


def _case_rngs(cfg, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(n)]


def _dump_failure(cfg, payload):
    path = os.path.join(cfg.out, "nonconvergence.json")
    _write_json(path, {"command": cfg.command, "config_hash": _config_hash(cfg), **payload})
    return EXIT_NONCONVERGENCE


# ---------------------------------------------------------------------------
# commands

def _run_barycenter(cfg, rt):
    mu = _input_measure(cfg)
    if mu is None:
        (rng,) = _case_rngs(cfg, 1)
        pts = [random_space_point(rng, dim=cfg.model.dim) for _ in range(5)]
        from .measures import DiscreteMeasure

        mu = DiscreteMeasure.from_atoms(pts)
    schedule = [p for p in cfg.p_schedule if math.isfinite(p)]
    rows = []
    for p in schedule:
        res = minimize(ObjectiveSpec(p, COSH_MODE, mu))
        if not res.converged:
            return _dump_failure(cfg, {"p": p, "grad_norm": res.grad_norm})
        rows.append((p, *res.minimizer.coords, res.value, res.grad_norm, res.iterations))
    n = cfg.model.dim + 1
    header = ["p"] + [f"coord_{i}" for i in range(n)] + ["value", "grad_norm", "iterations"]
    _write_csv(os.path.join(cfg.out, "barycenter.csv"), header, rows)
    _write_json(
        os.path.join(cfg.out, "barycenter.json"),
        {
            "command": cfg.command,
            "config_hash": _config_hash(cfg),
            "seed": cfg.seed,
            "atoms": len(mu),
            "schedule": schedule,
            "pass": True,
        },
    )
    return EXIT_OK


def _run_circumcenter(cfg, rt):
    mu = _input_measure(cfg)
    if mu is None:
        (rng,) = _case_rngs(cfg, 1)
        pts = [random_space_point(rng, dim=cfg.model.dim) for _ in range(5)]
        from .measures import DiscreteMeasure

        mu = DiscreteMeasure.from_atoms(pts)
    mode = BUSEMANN_MODE if mu.kind == "tangent" else COSH_MODE
    res = minimize(ObjectiveSpec(math.inf, mode, mu))
    if not res.converged:
        return _dump_failure(cfg, {"grad_norm": res.grad_norm})
    n = cfg.model.dim + 1
    header = [f"coord_{i}" for i in range(n)] + ["value", "grad_norm", "iterations"]
    rows = [(*res.minimizer.coords, res.value, res.grad_norm, res.iterations)]
    _write_csv(os.path.join(cfg.out, "circumcenter.csv"), header, rows)
    _write_json(
        os.path.join(cfg.out, "circumcenter.json"),
        {
            "command": cfg.command,
            "config_hash": _config_hash(cfg),
            "seed": cfg.seed,
            "atoms": len(mu),
            "pass": True,
        },
    )
    return EXIT_OK


def _run_extend(cfg, rt):
    f = _input_map(cfg)
    if f is None:
        raise ConfigError("extend needs an input boundary map under inputs.map")
    points = _input_points(cfg)
    if points is None:
        (rng,) = _case_rngs(cfg, 1)
        points = [random_space_point(rng, dim=cfg.model.dim) for _ in range(10)]
    ctx = ExtensionContext(f, uniform_boundary_grid(cfg.grid_n, origin(cfg.model.dim)), cfg.model)

    def solve(x):
        return extension_result(ctx, x, math.inf)

    with ThreadPoolExecutor(max_workers=rt.threads) as ex:
        results = list(ex.map(solve, points))
    rows = []
    for i, (x, res) in enumerate(zip(points, results)):
        if not res.converged:
            return _dump_failure(cfg, {"case": i, "point": list(x.coords), "grad_norm": res.grad_norm})
        rows.append((i, *x.coords, *res.minimizer.coords, res.grad_norm))
    n = cfg.model.dim + 1
    header = (
        ["case"]
        + [f"x_{i}" for i in range(n)]
        + [f"image_{i}" for i in range(n)]
        + ["grad_norm"]
    )
    _write_csv(os.path.join(cfg.out, "extend.csv"), header, rows)
    _write_json(
        os.path.join(cfg.out, "extend.json"),
        {
            "command": cfg.command,
            "config_hash": _config_hash(cfg),
            "seed": cfg.seed,
            "cases": len(points),
            "grid_n": cfg.grid_n,
            "pass": True,
        },
    )
    return EXIT_OK


def _run_converge_p(cfg, rt):
    nu = _input_measure(cfg)
    if nu is None:
        nu = _symmetric_tangent_measure(cfg)
    if nu.kind != "tangent":
        raise ConfigError("converge-p needs a tangent measure")
    schedule = [p for p in cfg.p_schedule if math.isfinite(p)]
    table = p_limit_experiment(nu, schedule)
    table.write_csv(os.path.join(cfg.out, "converge_p.csv"))
    final = table.rows[-2][2] if len(table.rows) >= 2 else 0.0
    tol = CONVERGENCE_TOL * rt.tolerance_scale
    ok = final <= tol
    _write_json(
        os.path.join(cfg.out, "converge_p.json"),
        {
            "command": cfg.command,
            "config_hash": _config_hash(cfg),
            "seed": cfg.seed,
            "schedule": schedule,
            "final_distance": final,
            "tolerance": tol,
            "pass": ok,
        },
    )
    return EXIT_OK if ok else EXIT_NONCONVERGENCE


def _run_converge_flow(cfg, rt):
    nu = _input_measure(cfg)
    if nu is None:
        nu = _symmetric_tangent_measure(cfg)
    if nu.kind != "tangent":
        raise ConfigError("converge-flow needs a tangent measure")
    p = next((q for q in cfg.p_schedule if math.isfinite(q)), 2.0)
    table = flow_limit_experiment(nu, p, list(cfg.t_schedule))
    table.write_csv(os.path.join(cfg.out, "converge_flow.csv"))
    distances = [row[2] for row in table.rows]
    tol = CONVERGENCE_TOL * rt.tolerance_scale
    ok = distances[-1] <= tol
    tail_monotone = all(b <= a + 1e-12 for a, b in zip(distances[-3:], distances[-2:]))
    _write_json(
        os.path.join(cfg.out, "converge_flow.json"),
        {
            "command": cfg.command,
            "config_hash": _config_hash(cfg),
            "seed": cfg.seed,
            "p": p,
            "final_distance": distances[-1],
            "tail_monotone": tail_monotone,
            "tolerance": tol,
            "pass": ok,
        },
    )
    return EXIT_OK if ok else EXIT_NONCONVERGENCE


# ---------------------------------------------------------------------------
# audit battery

def _random_pair_ctx(cfg, rng):
    g = random_lorentz(rng, dim=cfg.model.dim)
    grid = uniform_boundary_grid(cfg.grid_n, origin(cfg.model.dim))
    return ExtensionContext(BoundaryMap("lorentz", g), grid, cfg.model), g


def _gate_suite(cfg, rt):
    warped = BoundaryMap("perturbed", np.eye(3), np.array([0.1]))
    deviation = cross_ratio_deviation(warped, probe_quadruples())
    try:
        ExtensionContext(warped, uniform_boundary_grid(8, origin(2)))
        rejected = False
    except ValueError:
        rejected = True
    violation = GATE_FLOOR - deviation if rejected else math.inf
    return {
        "audit": "gate-rejection",
        "pairs": 1,
        "max_violation": violation,
        "tolerance": 0.0,
        "pass": violation <= 0.0,
        "deviation": deviation,
    }


def _balance_suite(cfg, rt, cases, n_cases=8):
    def one(case):
        _, rep = mu_x_p(case["ctx"], case["x"], 64.0)
        return rep.residual

    with ThreadPoolExecutor(max_workers=rt.threads) as ex:
        residuals = list(ex.map(one, cases[:n_cases]))
    return {
        "audit": "balance",
        "pairs": len(residuals),
        "max_violation": max(residuals),
        "tolerance": 1e-8 * rt.tolerance_scale,
        "pass": max(residuals) <= 1e-8 * rt.tolerance_scale,
    }


def _hull_suite(cfg, rt, cases, n_cases=8):
    def one(case):
        ctx, x = case["ctx"], case["x"]
        y = circumcenter_extension(ctx, x)
        cert = hull_certificate(argmax_set(ctx, x, y))
        bad = cert.min_norm
        off = exp_map(y, 0.5 * tangent_basis(y)[0])
        aset = argmax_set(ctx, x, off)
        cert_off = hull_certificate(aset)
        if cert_off.feasible or cert_off.separator is None:
            return math.inf
        dots = [
            -row[0] * cert_off.separator[0] + row[1:] @ cert_off.separator[1:]
            for row in aset.image_dirs
        ]
        if min(dots) <= 0.0:
            return math.inf
        return bad

    with ThreadPoolExecutor(max_workers=rt.threads) as ex:
        violations = list(ex.map(one, cases[:n_cases]))
    return {
        "audit": "hull-certificate",
        "pairs": len(violations),
        "max_violation": max(violations),
        "tolerance": 1e-9 * rt.tolerance_scale,
        "pass": max(violations) <= 1e-9 * rt.tolerance_scale,
    }


def _naturality_suite(cfg, rt, cases, n_cases=8):
    def one(case):
        ctx, g, x = case["ctx"], case["g"], case["x"]
        return dist(circumcenter_extension(ctx, x), SpacePoint(g @ x.coords))

    with ThreadPoolExecutor(max_workers=rt.threads) as ex:
        errs = list(ex.map(one, cases[:n_cases]))
    return {
        "audit": "naturality",
        "pairs": len(errs),
        "max_violation": max(errs),
        "tolerance": NATURALITY_TOL * rt.tolerance_scale,
        "pass": max(errs) <= NATURALITY_TOL * rt.tolerance_scale,
    }


def _derivative_suite(cfg, rt, cases):
    jobs = []
    for p in (4.0, 16.0, 64.0):
        for case in cases[:2]:
            jobs.append((case, p))

    def one(job):
        case, p = job
        v = tangent_basis(case["x"])[0]
        return derivative_identity_residual(case["ctx"], case["x"], v, p)

    with ThreadPoolExecutor(max_workers=rt.threads) as ex:
        residuals = list(ex.map(one, jobs))
    return {
        "audit": "derivative-identity",
        "pairs": len(residuals),
        "max_violation": max(residuals),
        "tolerance": 1e-4 * rt.tolerance_scale,
        "pass": max(residuals) <= 1e-4 * rt.tolerance_scale,
    }


def _invariant_suites(cfg, rt, pair_count=8):
    rngs = _case_rngs(cfg, pair_count + 2)
    cases = []
    for rng in rngs[:pair_count]:
        ctx, g = _random_pair_ctx(cfg, rng)
        cases.append({"ctx": ctx, "g": g, "x": random_space_point(rng, dim=cfg.model.dim)})
    pair_rng = rngs[pair_count]
    shared_ctx, shared_g = _random_pair_ctx(cfg, rngs[pair_count + 1])
    # the displacement identity behind the inequality audit is exact only up
    # to the balance residual times the cosh-scale of the pair, so the pair
    # ball is kept small enough for the solver tolerance to clear the slack
    pairs = [
        (
            random_space_point(pair_rng, dim=cfg.model.dim, radius=1.5),
            random_space_point(pair_rng, dim=cfg.model.dim, radius=1.5),
        )
        for _ in range(pair_count)
    ]
    go = SpacePoint(shared_g @ origin(cfg.model.dim).coords)
    back = ExtensionContext(
        BoundaryMap("lorentz", np.linalg.inv(shared_g)),
        uniform_boundary_grid(cfg.grid_n, go),
        cfg.model,
    )
    suites = [
        _gate_suite(cfg, rt),
        _balance_suite(cfg, rt, cases),
        _hull_suite(cfg, rt, cases),
        _naturality_suite(cfg, rt, cases),
        _derivative_suite(cfg, rt, cases),
        _scaled(main_inequality_audit(shared_ctx, pairs, 64.0), rt.tolerance_scale),
        _scaled(lipschitz_audit(shared_ctx, pairs), rt.tolerance_scale),
        _scaled(
            inverse_consistency(shared_ctx, back, [x for x, _ in pairs]),
            rt.tolerance_scale,
        ),
    ]
    return suites


def _run_audit(cfg, rt):
    suites = _invariant_suites(cfg, rt)
    ok = all(s["pass"] for s in suites)
    _write_json(
        os.path.join(cfg.out, "audit.json"),
        {
            "command": cfg.command,
            "config_hash": _config_hash(cfg),
            "seed": cfg.seed,
            "suites": suites,
            "pass": ok,
        },
    )
    return EXIT_OK if ok else 1


def _run_verify(cfg, rt):
    suites = [
        {k: v for k, v in s.items() if k != "rows"} for s in _invariant_suites(cfg, rt)
    ]
    ok = all(s["pass"] for s in suites)
    _write_json(
        os.path.join(cfg.out, "verify.json"),
        {
            "command": cfg.command,
            "config_hash": _config_hash(cfg),
            "seed": cfg.seed,
            "suites": suites,
            "pass": ok,
        },
    )
    return EXIT_OK if ok else 1


RUNNERS = {
    "barycenter": _run_barycenter,
    "circumcenter": _run_circumcenter,
    "extend": _run_extend,
    "converge-p": _run_converge_p,
    "converge-flow": _run_converge_flow,
    "audit": _run_audit,
    "verify": _run_verify,
}


def run(cfg, rt=Runtime()):
    """Execute one configured run; returns the process exit status."""
    os.makedirs(cfg.out, exist_ok=True)
    return RUNNERS[cfg.command](cfg, rt)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="horobary",
        description="seeded experiment and audit runs for boundary-map extensions",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="run this command")
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="report directory (default: reports)")
    parser.add_argument("--seed", type=int, help="seed for random cases")
    parser.add_argument("--grid", type=int, help="base grid size")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    parser.add_argument(
        "--tolerance-scale", type=float, default=1.0, help="multiply audit tolerances"
    )
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be positive")
    if args.tolerance_scale <= 0:
        parser.error("--tolerance-scale must be positive")
    try:
        cfg = _config_from_sources(args)
        code = run(cfg, Runtime(args.threads, args.tolerance_scale))
    except ConfigError as exc:
        print(f"horobary: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
