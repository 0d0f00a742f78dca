"""Command-line entry point: ``agewave <command> CONFIG [options]``.

Exit codes: 0 success, 1 usage error, 2 invalid input or failed
assumption checks, 3 failed numerical check, 4 I/O error.
"""

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, cauchy, config, spectral, spreading, waves
from .errors import AgewaveError, NumericalCheckError
from .model import SpaceGrid, validate_assumptions

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3, 4
THREADS_ENV = "AGEWAVE_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunManifest:
    command: str
    config_hash: str
    version: str = __version__
    grids: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    files: list = field(default_factory=list)
    dry_run: bool = False

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return "" if value is None else str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


class Run:
    """Output directory, manifest bookkeeping and the parsed config."""

    def __init__(self, args):
        self.args = args
        self.cfg = config.load(args.config)
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(args.command, self.cfg.digest, dry_run=args.manifest_only)
        model = self.cfg["model"]
        self.manifest.grids["age"] = {"a_max": model["a_max"], "n_a": model["n_a"]}
        self.started = time.perf_counter()

    def path(self, name):
        p = self.out / name
        self.manifest.files.append(str(p))
        return p

    def finish(self):
        self.manifest.wall_clock = time.perf_counter() - self.started
        write_json(self.path("manifest.json"), self.manifest.to_dict())


def _spec_and_report(run, gate=True):
    spec = run.cfg.build_model()
    if gate:
        assumptions = validate_assumptions(spec)
        if not assumptions.passed:
            raise config.ValidationError(f"assumptions failed: {assumptions.failures}")
    return spec, spectral.dispersion_report(spec)


def cmd_validate(run):
    report = validate_assumptions(run.cfg.build_model())
    data = report.to_dict()
    write_json(run.path("validate.json"), data)
    print(json.dumps(_jsonable(data), indent=2, sort_keys=True))
    run.manifest.margins = {k: v["residual"] for k, v in data["items"].items()} if isinstance(
        data.get("items"), dict) else {}
    return EXIT_OK if report.passed else EXIT_VALIDATION


SPEED_TABLE_FACTORS = (1.0, 1.05, 1.1, 1.25, 1.5, 2.0, 3.0)


def dispersion_rows(rep, factors=SPEED_TABLE_FACTORS):
    """(c, λ1, λ2, λ(c), Λ(λ(c), c)) at multiples of the critical speed."""
    for f in factors:
        c = rep.c_star * f
        lam_c = rep.lambda_of(c)
        l1, l2 = rep.roots(c)
        yield c, l1, l2, lam_c, rep.big_lambda(lam_c, c)


def cmd_speed(run):
    run.manifest.tolerances = {"rho": spectral.RHO_TOL, "root_xtol": spectral.ROOT_XTOL,
                               "critical": spectral.CRIT_TOL}
    if run.args.manifest_only:
        run.path("speed.json")
        run.path("dispersion.csv")
        return EXIT_OK
    spec, rep = _spec_and_report(run)
    data = rep.to_dict()
    data["a"] = spec.nodes
    write_json(run.path("speed.json"), data)
    write_csv(run.path("dispersion.csv"),
              ("c", "lambda1", "lambda2", "lambda_of_c", "big_lambda_at_tangency"),
              dispersion_rows(rep))
    run.manifest.margins = {"s0": rep.s0, "c_star": rep.c_star}
    print(json.dumps({k: data[k] for k in ("s0", "c_star", "lambda_star")}, indent=2, sort_keys=True))
    return EXIT_OK


def _wave_frame(run):
    w = run.cfg["wave"]
    L = run.args.L_xi if run.args.L_xi is not None else w["L_xi"]
    n = run.args.n_xi if run.args.n_xi is not None else w["n_xi"]
    return SpaceGrid(float(L), int(n))


def cmd_wave(run):
    w = run.cfg["wave"]
    frame = _wave_frame(run)
    tol = run.args.tol if run.args.tol is not None else w["tol"]
    max_iter = run.args.max_iter if run.args.max_iter is not None else w["max_iter"]
    critical = run.args.critical or (run.args.c is None and str(w["c"]).strip() == "critical")
    run.manifest.grids["xi"] = {"L_xi": frame.half_width, "n_xi": frame.n_x}
    run.manifest.tolerances = {"tol": tol, "max_iter": max_iter, "order": waves.ORDER_TOL}
    if run.args.manifest_only:
        run.path("wave.csv")
        run.path("wave.json")
        return EXIT_OK
    spec, rep = _spec_and_report(run)
    if critical:
        prof = waves.critical_wave(spec, rep, frame, tol=tol, max_iter=max(max_iter, 20000))
        prof.diagnostics.pop("profiles", None)
    else:
        c = float(run.args.c if run.args.c is not None else w["c"])
        pair = waves.grid_consistent_pair(spec, rep, c, frame)
        prof = waves.monotone_iterate(spec, c, pair, frame, tol=tol, max_iter=max_iter,
                                      branch=w["branch"])
        lip = waves.lipschitz_modulus_check(prof)
        prof.lipschitz_m = lip.m_fit
    rows = ((a, x, prof.w[i, j]) for i, a in enumerate(prof.a) for j, x in enumerate(prof.xi))
    write_csv(run.path("wave.csv"), ("a", "xi", "w"), rows)
    summary = prof.summary()
    summary["c_star"] = rep.c_star
    write_json(run.path("wave.json"), summary)
    run.manifest.margins = {"residual": prof.residual,
                            "monotonicity_violation": prof.monotonicity_violation(),
                            "sandwich_lower": summary["sandwich_lower"],
                            "sandwich_upper": summary["sandwich_upper"]}
    print(json.dumps(_jsonable({k: summary[k] for k in ("c", "iterations", "residual")}), sort_keys=True))
    return EXIT_OK


def _initial_data(expr, base):
    text = str(expr).strip()
    if not text.startswith("expr:"):
        raise config.ValidationError("u0 must be given as expr:<expression in a, x>")
    return lambda a, x: config._evaluate(text[5:], a=a, x=x)


def cmd_simulate(run):
    s = run.cfg["simulate"]
    T = run.args.T if run.args.T is not None else s["T"]
    L = run.args.domain if run.args.domain is not None else s["L"]
    closure = run.args.closure or s["closure"]
    raw_snaps = run.args.snapshots if run.args.snapshots is not None else s["snapshots"]
    times = config.parse_times(raw_snaps) or [0.0, T]
    grid = SpaceGrid.from_spacing(float(L), float(s["h_x"]))
    run.manifest.grids["x"] = {"L": grid.half_width, "n_x": grid.n_x, "h_x": grid.step}
    run.manifest.tolerances = {"range": cauchy.RANGE_TOL}
    if run.args.manifest_only:
        for k in range(len(times)):
            run.path(f"snapshot_{k:03d}.csv")
        run.path("simulate.json")
        return EXIT_OK
    spec = run.cfg.build_model()
    if run.args.dt is not None and abs(run.args.dt - spec.age_grid.step) > 1e-12:
        raise config.ValidationError(f"dt must equal the age step {spec.age_grid.step}")
    traj = cauchy.run(_initial_data(s["u0"], run.cfg.base), spec, grid, float(T),
                      sample_times=times, closure=closure)
    for k, f in enumerate(traj.snapshots):
        rows = ((a, x, f.u[i, j]) for i, a in enumerate(spec.nodes) for j, x in enumerate(grid.nodes))
        write_csv(run.path(f"snapshot_{k:03d}.csv"), ("a", "x", "u"), rows)
    summary = {"dt": traj.dt, "cfl": traj.cfl, "closure": traj.closure, "min": traj.min_value,
               "max": traj.max_value, "times": traj.times,
               "snapshot_files": [f"snapshot_{k:03d}.csv" for k in range(len(traj.snapshots))]}
    write_json(run.path("simulate.json"), summary)
    run.manifest.margins = {"min": traj.min_value, "max_minus_one": traj.max_value - 1.0}
    return EXIT_OK


def cmd_spread(run):
    s = run.cfg["spread"]
    args = run.args
    experiment = args.experiment or s["experiment"]
    rho = args.rho if args.rho is not None else s["rho"]
    c_frac = args.c_frac if args.c_frac is not None else s["c_frac"]
    T = float(args.T if args.T is not None else s["T"])
    grid = SpaceGrid.from_spacing(float(s["L"]), float(s["h_x"]))
    run.manifest.grids["x"] = {"L": grid.half_width, "n_x": grid.n_x, "h_x": grid.step}
    run.manifest.tolerances = {"rho": rho, "c_frac": c_frac, "T": T, "window": s["window"]}
    if args.manifest_only:
        if experiment in ("speed", "outer"):
            run.path("front.csv")
        run.path("spread.json")
        return EXIT_OK
    spec, rep = _spec_and_report(run)
    verdict = {"experiment": experiment, "c_star": rep.c_star}
    margins = {}
    if experiment in ("speed", "outer"):
        res = spreading.spreading_run(spec, grid, T, rho=rho, window=s["window"])
        write_csv(run.path("front.csv"), ("t", "x_plus", "x_minus"), res.track.rows())
        est = res.estimate
        verdict.update(c_hat=est.c_right, c_left=est.c_left, stderr=est.stderr_right,
                       ratio=est.c_right / rep.c_star, asymmetry=est.asymmetry)
        outer = spreading.outer_bound_check(res.trajectory, spec, rep, rep.c_star + s["c_offset"])
        margins["outer"] = outer.worst_margin
        verdict["outer_sup_beyond_front"] = outer.outside_sup
        final = res.trajectory.snapshots[-1]
        inside = np.abs(grid.nodes) <= c_frac * rep.c_star * final.t
        if inside.any():
            verdict["interior_min"] = float(final.u[:, inside].min())
    elif experiment == "inner":
        res = spreading.inner_spreading_check(spec, rep, grid, c_frac, T)
        verdict.update(interior_min=res.interior_min, v_max=res.v_max, cap=res.cap, passed=res.passed)
        margins["inner"] = res.worst_margin
    elif experiment == "hair":
        res = spreading.hair_trigger_check(spec, grid, s["rho0"], rho, x0=s["x0"], T_max=T)
        verdict.update(T_elapsed=res.T, x0=res.x0, steps=res.steps)
        margins["hair"] = res.worst_margin
    else:
        raise UsageError(f"unknown experiment {experiment!r}")
    verdict["margins"] = margins
    run.manifest.margins = margins
    write_json(run.path("spread.json"), verdict)
    print(json.dumps(_jsonable({k: v for k, v in verdict.items() if not isinstance(v, list)}),
                     sort_keys=True))
    return EXIT_OK


def sweep_point(cfg, point):
    """Critical speed for one override point; failures are returned as rows."""
    overrides = dict(point)
    if "sigma" in overrides and cfg["model"]["kernel"] != "gaussian":
        return {**point, "status": "failed: sigma applies to the gaussian kernel only"}
    try:
        spec = config.build_model({**cfg["model"], **overrides}, cfg.base)
        rep = spectral.dispersion_report(spec)
    except AgewaveError as exc:
        return {**point, "status": f"failed: {type(exc).__name__}: {exc}"}
    return {**point, "s0": rep.s0, "c_star": rep.c_star, "lambda_star": rep.lambda_star,
            "status": "ok"}


def sweep(cfg, points=None, threads=None):
    points = config.sweep_points(cfg) if points is None else points
    threads = threads or int(os.environ.get(THREADS_ENV, "0") or 0) or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda p: sweep_point(cfg, p), points))


def cmd_sweep(run):
    points = config.sweep_points(run.cfg)
    keys = [k for k in config.SWEEP_KEYS if any(k in p for p in points)] or list(config.SWEEP_KEYS)
    header = keys + ["s0", "c_star", "lambda_star", "status"]
    run.manifest.grids["sweep_points"] = len(points)
    if run.args.manifest_only:
        run.path("sweep.csv")
        return EXIT_OK
    rows = sweep(run.cfg, points)
    write_csv(run.path("sweep.csv"), header, ([r.get(k) for k in header] for r in rows))
    failed = sum(r["status"] != "ok" for r in rows)
    run.manifest.margins = {"failed_points": failed}
    print(f"{len(rows)} points, {failed} failed")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "speed": cmd_speed, "wave": cmd_wave,
            "simulate": cmd_simulate, "spread": cmd_spread, "sweep": cmd_sweep}


def build_parser():
    parser = _Parser(prog="agewave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="INI configuration file")
        p.add_argument("--out", default="agewave_out", help="output directory")
        p.add_argument("--manifest-only", action="store_true",
                       help="write the run manifest without computing")
        return p

    add("validate", "check the structural assumptions of the model")
    add("speed", "s0, the eigenfunction φ, c* and λ(c*)")
    p = add("wave", "traveling wave profile by monotone iteration")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--c", type=float)
    g.add_argument("--critical", action="store_true")
    p.add_argument("--L-xi", dest="L_xi", type=float)
    p.add_argument("--n-xi", dest="n_xi", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p = add("simulate", "initial-value problem on a space window")
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float, help="must equal the age step")
    p.add_argument("--domain", type=float, help="half-width L of the space window")
    p.add_argument("--closure", choices=cauchy.CLOSURES)
    p.add_argument("--snapshots", help="comma-separated sample times")
    p = add("spread", "spreading experiments")
    p.add_argument("--experiment", choices=("outer", "inner", "hair", "speed"))
    p.add_argument("--rho", type=float)
    p.add_argument("--c-frac", dest="c_frac", type=float)
    p.add_argument("--T", type=float)
    add("sweep", "critical speed over a grid of parameter overrides")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"agewave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        run = Run(args)
        code = COMMANDS[args.command](run)
        run.finish()
        return code
    except UsageError as exc:
        print(f"agewave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalCheckError as exc:
        print(f"agewave: numerical check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (AgewaveError, ValueError) as exc:
        print(f"agewave: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"agewave: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
