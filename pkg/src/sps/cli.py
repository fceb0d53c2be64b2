"""Command dispatch, configuration, and bit-stable artifact export.

Usage:

    sps <command> --config <file> [--p 5.0 --lambda 1.0 --resolution 33
                                   --seed 7 --out DIR ...]

Commands: ground-state, poisson-check, sweep-p, instanton, multiplicity,
gradcheck.  Configuration lives in a JSON file; command-line flags
override file values.  Every run ends by atomically writing a manifest
that echoes the configuration and inventories the produced files with
content hashes.  Exit status: 0 success, 1 configuration error, 2 a solve
failed to converge.

Numbers in CSV artifacts are written with 17 significant digits so that
parsing them back reproduces the in-memory doubles exactly; re-running a
command with the same config, seed, and thread cap reproduces all numeric
fields exactly (runtime columns excepted, being wall-clock measurements).
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import hashlib
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .asymptotics import sobolev_constant, sweep_p
from .energy import ProblemParams, evaluate, gradient
from .errors import ConfigError, NoConvergenceError, NotConvergedError, SPSError
from .grid import DomainSpec, ScalarField, apply_laplacian, build_grid, write_vtk
from .multiplicity import TransplantCache, multistart_search
from .poisson import coupling_term, solve_poisson
from .solver import SolveOptions, find_ground_state

COMMANDS = ("ground-state", "poisson-check", "sweep-p", "instanton",
            "multiplicity", "gradcheck")

DEFAULT_SWEEP = (4.2, 4.6, 5.0, 5.4, 5.8)


@dataclasses.dataclass
class RunConfig:
    """Validated parameters for one command invocation."""

    domain: DomainSpec
    resolution: int = 17
    p: float = 5.0
    lam: float = 1.0
    r: float | None = None
    seed: int = 7
    out: str = "runs/out"
    max_iterations: int = 2000
    gradient_tolerance: float | None = None
    p_list: tuple = DEFAULT_SWEEP
    n_centers: int = 12
    quadrature_points: int = 100_000
    transplant_resolution: int | None = None

    def solve_options(self):
        return SolveOptions(
            max_iterations=self.max_iterations,
            gradient_tolerance=self.gradient_tolerance,
            seed=self.seed,
        )

    def effective_r(self):
        return self.r if self.r is not None else 0.3 * self.domain.inradius()


def _domain_from_dict(d):
    kind = d.get("kind")
    try:
        if kind == "ball":
            return DomainSpec.ball(d["radius"])
        if kind == "box":
            return DomainSpec.box(d["half_widths"])
        if kind == "shell":
            return DomainSpec.shell(d["inner"], d["outer"])
        if kind == "ball_union":
            return DomainSpec.ball_union([(b["center"], b["radius"]) for b in d["balls"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from exc
    raise ConfigError(f"domain.kind: unknown kind {kind!r}")


def _domain_to_dict(domain):
    if domain.kind == "ball":
        return {"kind": "ball", "radius": domain.radius}
    if domain.kind == "box":
        return {"kind": "box", "half_widths": list(domain.half_widths)}
    if domain.kind == "shell":
        return {"kind": "shell", "inner": domain.inner, "outer": domain.outer}
    return {"kind": "ball_union",
            "balls": [{"center": list(c), "radius": r} for c, r in domain.balls]}


def config_from_dict(data):
    """Build and validate a RunConfig from a plain dict (parsed JSON)."""
    if "domain" not in data:
        raise ConfigError("domain: required")
    cfg = RunConfig(
        domain=_domain_from_dict(data["domain"]),
        resolution=int(data.get("resolution", 17)),
        p=float(data.get("p", 5.0)),
        lam=float(data.get("lambda", 1.0)),
        r=None if data.get("r") is None else float(data["r"]),
        seed=int(data.get("seed", 7)),
        out=str(data.get("out", "runs/out")),
        max_iterations=int(data.get("solver", {}).get("max_iterations", 2000)),
        gradient_tolerance=data.get("solver", {}).get("gradient_tolerance"),
        p_list=tuple(float(p) for p in data.get("sweep", {}).get("p_list", DEFAULT_SWEEP)),
        n_centers=int(data.get("multistart", {}).get("n_centers", 12)),
        quadrature_points=int(data.get("quadrature_points", 100_000)),
        transplant_resolution=data.get("multistart", {}).get("transplant_resolution"),
    )
    validate_config(cfg)
    return cfg


def config_to_dict(cfg):
    """Inverse of config_from_dict; round-trips exactly."""
    return {
        "domain": _domain_to_dict(cfg.domain),
        "resolution": cfg.resolution,
        "p": cfg.p,
        "lambda": cfg.lam,
        "r": cfg.r,
        "seed": cfg.seed,
        "out": cfg.out,
        "solver": {
            "max_iterations": cfg.max_iterations,
            "gradient_tolerance": cfg.gradient_tolerance,
        },
        "sweep": {"p_list": list(cfg.p_list)},
        "multistart": {
            "n_centers": cfg.n_centers,
            "transplant_resolution": cfg.transplant_resolution,
        },
        "quadrature_points": cfg.quadrature_points,
    }


def validate_config(cfg):
    if not 4.0 < cfg.p < 6.0:
        raise ConfigError(f"p: must lie in (4, 6), got {cfg.p}")
    if cfg.lam < 0:
        raise ConfigError(f"lambda: must be >= 0, got {cfg.lam}")
    if cfg.resolution < 8:
        raise ConfigError(f"resolution: must be >= 8, got {cfg.resolution}")
    if cfg.r is not None and cfg.r <= 0:
        raise ConfigError(f"r: must be > 0, got {cfg.r}")
    if cfg.max_iterations < 1:
        raise ConfigError("solver.max_iterations: must be >= 1")
    if cfg.gradient_tolerance is not None and cfg.gradient_tolerance <= 0:
        raise ConfigError("solver.gradient_tolerance: must be > 0 or null")
    if any(not 4.0 < p < 6.0 for p in cfg.p_list):
        raise ConfigError("sweep.p_list: all entries must lie in (4, 6)")
    if cfg.n_centers < 1:
        raise ConfigError("multistart.n_centers: must be >= 1")
    if cfg.quadrature_points < 1000:
        raise ConfigError("quadrature_points: must be >= 1000")


def load_config(path=None, overrides=None):
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config: file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON: {exc}") from exc
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in ("max_iterations", "gradient_tolerance"):
            data.setdefault("solver", {})[key] = value
        elif key in ("n_centers", "transplant_resolution"):
            data.setdefault("multistart", {})[key] = value
        elif key == "p_list":
            data.setdefault("sweep", {})["p_list"] = value
        else:
            data[key] = value
    return config_from_dict(data)


# --------------------------- artifact export ---------------------------

def _format_cell(v):
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, columns, rows):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path):
    """Parse back a package CSV: (columns, rows of str cells)."""
    with open(path) as fh:
        lines = fh.read().strip().split("\n")
    columns = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return columns, rows


def _atomic_write_json(path, payload):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def export(result, fmt, path):
    """Write one artifact: fmt in {csv, vtk, manifest}.

    csv expects (columns, rows); vtk expects a ScalarField; manifest
    expects a JSON-serializable dict (written atomically).
    """
    if fmt == "csv":
        columns, rows = result
        write_csv(path, columns, rows)
    elif fmt == "vtk":
        if not isinstance(result, ScalarField):
            raise TypeError("vtk export needs a ScalarField")
        write_vtk(result, path)
    elif fmt == "manifest":
        _atomic_write_json(path, result)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return path


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunManifest:
    """Collects per-run outputs and writes the closing manifest."""

    def __init__(self, command, cfg, out_dir):
        self.command = command
        self.cfg = cfg
        self.out_dir = out_dir
        self.results = {}
        self.files = []
        self.error = None

    def add_file(self, path):
        self.files.append({
            "path": os.path.basename(path),
            "sha256": _sha256(path),
            "bytes": os.path.getsize(path),
        })

    def write(self):
        payload = {
            "command": self.command,
            "config": config_to_dict(self.cfg),
            "version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "results": self.results,
            "files": self.files,
            "error": self.error,
        }
        path = os.path.join(self.out_dir, "manifest.json")
        _atomic_write_json(path, payload)
        return path


# ------------------------------ commands -------------------------------

def _random_field(grid, rng, scale=1.0):
    return ScalarField(grid, scale * rng.standard_normal(grid.n_interior))


def _cmd_ground_state(cfg, manifest, out):
    grid = build_grid(cfg.domain, cfg.resolution)
    gs = find_ground_state(grid, ProblemParams(lam=cfg.lam, p=cfg.p), cfg.solve_options())
    upath = os.path.join(out, "u.vtk")
    write_vtk(gs.u, upath, name="u")
    manifest.add_file(upath)
    tpath = os.path.join(out, "trace.csv")
    write_csv(tpath, ("iteration", "I", "nehari_residual", "ps_residual"), gs.trace)
    manifest.add_file(tpath)
    manifest.results.update({
        "m": gs.m,
        "iterations": gs.iterations,
        "converged": gs.converged,
        "nehari_residual": gs.nehari_residual,
        "ps_residual": gs.ps_residual,
    })
    print(f"ground state: m = {gs.m:.12g}  iterations = {gs.iterations} "
          f"converged = {gs.converged}")
    return 0 if gs.converged else 2


def _cmd_poisson_check(cfg, manifest, out):
    grid = build_grid(cfg.domain, cfg.resolution)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    ok = True

    for i in range(20):
        u = _random_field(grid, rng)
        phi = solve_poisson(u).phi
        lhs = grid.h ** 3 * float(apply_laplacian(phi).values @ phi.values)
        rhs = coupling_term(u, phi)
        rel = abs(lhs - rhs) / abs(rhs)
        passed = rel <= 1e-8
        ok &= passed
        rows.append(("green_identity", i, rel, 1e-8, passed))

    for i in range(20):
        u = _random_field(grid, rng)
        phi = solve_poisson(u).phi
        floor = -1e-10 * float(np.sum(u.values ** 2))
        passed = float(phi.values.min()) >= floor
        ok &= passed
        rows.append(("positivity_min", i, float(phi.values.min()), floor, passed))

    for i in range(5):
        u = _random_field(grid, rng)
        phi1 = solve_poisson(u).phi
        phi2 = solve_poisson(u * np.sqrt(2.0)).phi
        rel = float(np.max(np.abs(phi2.values - 2.0 * phi1.values)) /
                    max(np.max(np.abs(phi1.values)), 1e-300))
        passed = rel <= 1e-8
        ok &= passed
        rows.append(("rhs_linearity", i, rel, 1e-8, passed))

    path = os.path.join(out, "poisson_check.csv")
    write_csv(path, ("check", "index", "value", "bound", "passed"), rows)
    manifest.add_file(path)
    manifest.results["all_passed"] = bool(ok)
    print(f"poisson-check: {'all passed' if ok else 'FAILURES'} ({len(rows)} checks)")
    return 0


def _cmd_sweep_p(cfg, manifest, out):
    grid = build_grid(cfg.domain, cfg.resolution)
    records = sweep_p(grid, ProblemParams(lam=cfg.lam, p=cfg.p), cfg.p_list,
                      cfg.solve_options())
    path = os.path.join(out, "sweep.csv")
    write_csv(path, records[0].CSV_COLUMNS, [r.csv_row() for r in records])
    manifest.add_file(path)
    manifest.results["records"] = [
        {"p": r.p, "m_p": r.m_p, "m_tilde_p": r.m_tilde_p, "converged": r.converged}
        for r in records
    ]
    bad = [r.p for r in records if not r.converged]
    for r in records:
        print(f"p = {r.p:.3g}: m_p = {r.m_p:.9g}  m_tilde_p = {r.m_tilde_p:.9g} "
              f"t* = {r.t_star_simple:.6g}  converged = {r.converged}")
    return 2 if bad else 0


def _cmd_instanton(cfg, manifest, out):
    rows = []
    for R in (1.0, 10.0):
        S, grad_e, crit = sobolev_constant(cfg.quadrature_points, R=R)
        m_star = S ** 1.5 / 3.0
        rows.append((cfg.quadrature_points, R, S, grad_e, crit, m_star))
    S = rows[0][2]
    m_star = rows[0][5]
    identity_gap = abs(m_star - S ** 1.5 / 3.0)
    r_spread = abs(rows[0][2] - rows[1][2]) / rows[0][2]
    path = os.path.join(out, "instanton.csv")
    write_csv(path, ("quad_points", "R", "S", "grad_energy", "crit_norm", "m_star"), rows)
    manifest.add_file(path)
    manifest.results.update({"S": S, "m_star": m_star, "R_invariance": r_spread})
    print(f"S = {S:.12g}")
    print(f"m_star = {m_star:.12g}")
    print(f"identity m_star = S^(3/2)/3 gap: {identity_gap:.3g}")
    print(f"R-invariance spread (R=1 vs R=10): {r_spread:.3g}")
    return 0


def _cmd_multiplicity(cfg, manifest, out):
    grid = build_grid(cfg.domain, cfg.resolution)
    r = cfg.effective_r()
    tr = cfg.transplant_resolution or (cfg.resolution if cfg.resolution % 2 else cfg.resolution + 1)
    cache = TransplantCache(resolution=tr, opts=cfg.solve_options())
    catalog = multistart_search(grid, ProblemParams(lam=cfg.lam, p=cfg.p), r,
                                cfg.n_centers, cfg.solve_options(), cache=cache)
    rows = []
    for i, e in enumerate(catalog.entries):
        rows.append((i, e.state.m, e.state.nehari_residual, e.state.ps_residual,
                     e.barycenter[0], e.barycenter[1], e.barycenter[2],
                     e.membership, e.sublevel))
        vpath = os.path.join(out, f"entry_{i:03d}.vtk")
        write_vtk(e.state.u, vpath, name="u")
        manifest.add_file(vpath)
    path = os.path.join(out, "catalog.csv")
    write_csv(path, ("id", "m", "g_residual", "ps_residual", "bx", "by", "bz",
                     "membership", "sublevel"), rows)
    manifest.add_file(path)
    manifest.results.update({
        "entries": len(catalog.entries),
        "distinct_modulo_symmetry": catalog.distinct_modulo_symmetry(),
        "category_bound": catalog.category + 1,
        "m_ball": catalog.m_ball,
        "notes": catalog.notes,
    })
    for note in catalog.notes:
        print(note)
    return 0 if catalog.entries else 2


def _cmd_gradcheck(cfg, manifest, out):
    grid = build_grid(cfg.domain, cfg.resolution)
    rng = np.random.default_rng(cfg.seed)
    params = ProblemParams(lam=cfg.lam, p=cfg.p, positive_part=False)
    rows = []
    worst = 0.0
    for i in range(10):
        u = _random_field(grid, rng)
        v = _random_field(grid, rng)
        eps = 1e-5 * np.linalg.norm(u.values) / np.linalg.norm(v.values)
        analytic = grid.h ** 3 * float(gradient(u, params).values @ v.values)
        plus = evaluate(u + v * eps, params).I
        minus = evaluate(u - v * eps, params).I
        fd = (plus - minus) / (2.0 * eps)
        rel = abs(fd - analytic) / max(abs(analytic), 1e-300)
        worst = max(worst, rel)
        rows.append((i, cfg.p, cfg.lam, analytic, fd, rel))
    path = os.path.join(out, "gradcheck.csv")
    write_csv(path, ("pair", "p", "lambda", "analytic", "central_diff", "rel_error"), rows)
    manifest.add_file(path)
    manifest.results["max_rel_error"] = worst
    print(f"gradcheck: max relative error {worst:.3e} over {len(rows)} pairs")
    return 0 if worst <= 1e-5 else 2


_HANDLERS = {
    "ground-state": _cmd_ground_state,
    "poisson-check": _cmd_poisson_check,
    "sweep-p": _cmd_sweep_p,
    "instanton": _cmd_instanton,
    "multiplicity": _cmd_multiplicity,
    "gradcheck": _cmd_gradcheck,
}


def run(command, cfg):
    """Execute one command; returns the process exit status."""
    if command not in _HANDLERS:
        raise ConfigError(f"command: unknown command {command!r}")
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    manifest = RunManifest(command, cfg, out)
    started = time.perf_counter()
    try:
        status = _HANDLERS[command](cfg, manifest, out)
    except (NotConvergedError, NoConvergenceError) as exc:
        manifest.error = {"code": "not-converged", "message": str(exc)}
        manifest.results["elapsed_s"] = time.perf_counter() - started
        manifest.write()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SPSError as exc:
        manifest.error = {"code": type(exc).__name__, "message": str(exc)}
        manifest.write()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest.results["elapsed_s"] = time.perf_counter() - started
    manifest.write()
    return status


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sps",
        description="Ground states and multiplicity experiments for a "
                    "nonlocally coupled elliptic system on bounded 3D domains.",
    )
    parser.add_argument("command", metavar=f"{{{','.join(COMMANDS)}}}")
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--p", type=float, dest="p")
    parser.add_argument("--lambda", type=float, dest="lam")
    parser.add_argument("--resolution", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out")
    parser.add_argument("--r", type=float)
    parser.add_argument("--n-centers", type=int, dest="n_centers")
    parser.add_argument("--quad-points", type=int, dest="quadrature_points")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    overrides = {
        "p": args.p,
        "lambda": args.lam,
        "resolution": args.resolution,
        "seed": args.seed,
        "out": args.out,
        "r": args.r,
        "n_centers": args.n_centers,
        "quadrature_points": args.quadrature_points,
    }
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(args.command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
