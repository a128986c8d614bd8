"""``contraction-lab`` command line front end.

Exit codes: 0 success / feasible, 1 infeasible or failed check, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .checks import run_checks
from .contraction import (
    Certificate,
    certify,
    epsilon_interval_mech,
    mech_lie_matrix,
)
from .errors import ContractionLabError, NonPositiveDistance
from .numerics import DEFAULT_TOL
from .sim import (
    contraction_bound,
    disk_distance_to_EP,
    disk_reduced_coords,
    fit_rate,
    lyapunov_values,
    metric_distance,
    pair_divergence,
    rk4_integrate,
    verify_contraction_bound,
)
from .sysfile import load_with_label
from .systems import (
    ChaplyginDisk,
    ContactSystem,
    MechanicalSystem,
    contact_field,
    contact_metric,
    disk_constraint_residual,
    disk_flow,
    disk_metric,
    disk_state,
    lyapunov,
    mech_field,
    mech_metric,
)

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
BOUND_TOL = 1e-3


def seed_from_env() -> int:
    return int(os.environ.get("CONTRACTION_LAB_SEED", "42"))


def fmt(x) -> str:
    """17 significant digits; booleans as 0/1."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if x is None:
        return ""
    return f"{float(x):.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


class Report:
    def __init__(self, argv: list[str]):
        self.entries: dict = {"command": " ".join(["contraction-lab", *argv])}
        self._start = time.perf_counter()

    def __setitem__(self, key, value):
        self.entries[key] = value

    def emit(self, as_json: bool, stream=None) -> None:
        stream = stream or sys.stdout
        self.entries["wall_clock_s"] = round(time.perf_counter() - self._start, 3)
        if as_json:
            json.dump(self.entries, stream, indent=2, default=_jsonable)
            stream.write("\n")
            return
        for key, value in self.entries.items():
            if isinstance(value, dict):
                stream.write(f"{key}:\n")
                for k, v in value.items():
                    stream.write(f"  {k}: {_show(v)}\n")
            elif isinstance(value, list):
                stream.write(f"{key}:\n")
                for item in value:
                    stream.write(f"  - {_show(item)}\n")
            else:
                stream.write(f"{key}: {_show(value)}\n")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    return str(x)


def _show(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _interval_for(system):
    mech = _mechanical_view(system)
    if mech is None or not mech.b > 0:
        return None
    iv = epsilon_interval_mech(mech)
    return {"lo": iv.lo, "hi": iv.hi, "open": "both"}


def _mechanical_view(system):
    if isinstance(system, MechanicalSystem):
        return system
    if isinstance(system, ChaplyginDisk):
        return system.reduced()
    if isinstance(system, ContactSystem):
        return system.mechanical_part()
    return None


def _certificate(system, eps: float, tol: float, radius: float | None, seed: int) -> Certificate:
    if isinstance(system, ContactSystem):
        return certify(system, eps, tol, radius=radius, seed=seed)
    return certify(system, eps, tol)


# -- commands ----------------------------------------------------------------


def cmd_certify(args, report: Report) -> int:
    system, label = load_with_label(args.file)
    report["system"] = label
    cert = _certificate(system, args.epsilon, args.tol, args.radius, seed_from_env())
    report["certificate"] = cert.as_dict()
    interval = _interval_for(system)
    if interval is not None:
        report["epsilon_interval"] = interval
    report["note"] = "rate = -mu_max(S, G)/2 from the pencil of the certified matrix; conservative, not given in closed form by the theory"
    return EXIT_OK if cert.feasible else EXIT_FAIL


def _sweep_row(system, eps: float, tol: float, seed: int):
    mech = _mechanical_view(system)
    g = mech_metric(mech, eps) if not isinstance(system, ContactSystem) else contact_metric(system, eps)
    spd = bool(np.linalg.eigvalsh(g)[0] > 1e-12)
    if not spd:
        top = float(np.linalg.eigvalsh(mech_lie_matrix(mech, eps))[-1])
        return (eps, False, 0.0, top, False)
    cert = _certificate(system, eps, tol, None, seed)
    return (eps, cert.feasible, cert.rate, cert.max_eigenvalue, True)


def cmd_sweep(args, report: Report) -> int:
    if not args.min < args.max:
        raise argparse.ArgumentTypeError("--min must be smaller than --max")
    if args.steps < 2:
        raise argparse.ArgumentTypeError("--steps must be >= 2")
    system, label = load_with_label(args.file)
    seed = seed_from_env()
    grid = np.linspace(args.min, args.max, args.steps)
    rows = [_sweep_row(system, float(e), args.tol, seed) for e in grid]
    out = Path(args.out)
    write_csv(out, ["eps", "feasible", "rate", "max_eigenvalue", "metric_spd"], rows)
    report["system"] = label
    report["rows"] = len(rows)
    report["feasible_rows"] = sum(1 for r in rows if r[1])
    feasible = [r for r in rows if r[1]]
    if feasible:
        best = max(feasible, key=lambda r: r[2])
        report["best_eps"] = {"eps": best[0], "rate": best[2]}
    interval = _interval_for(system)
    if interval is not None:
        report["epsilon_interval"] = interval
    report["csv"] = str(out)
    return EXIT_OK


def _parse_vector(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name} must be a comma-separated list of reals") from None


def _disk_initial(system: ChaplyginDisk, x: np.ndarray, name: str) -> np.ndarray:
    if x.size == 4:
        return disk_state(system, *x)
    if x.size == 8:
        return x
    raise argparse.ArgumentTypeError(f"{name} for a disk needs 4 reduced or 8 full coordinates")


def cmd_simulate(args, report: Report) -> int:
    system, label = load_with_label(args.file)
    seed = seed_from_env()
    x0 = _parse_vector(args.x0, "--x0")
    x1 = _parse_vector(args.x1, "--x1")
    if not args.dt > 0 or not args.T > 0:
        raise argparse.ArgumentTypeError("--dt and --T must be > 0")
    steps = int(round(args.T / args.dt))
    eps = args.epsilon

    cert = _certificate(system, eps, args.tol, args.radius, seed)
    rate = cert.rate if args.rate is None else args.rate

    if isinstance(system, ChaplyginDisk):
        start = np.stack([_disk_initial(system, x0, "--x0"), _disk_initial(system, x1, "--x1")])
        traj = rk4_integrate(disk_flow(system), start, args.dt, steps)
        g = disk_metric(system, eps)
        d = metric_distance(g, disk_reduced_coords(traj.states[:, 0]), disk_reduced_coords(traj.states[:, 1]))
        v = lyapunov(system.reduced(), eps, disk_reduced_coords(traj.states[:, 0]))
        dist_ep = disk_distance_to_EP(traj.states[:, 0], system, eps)
        residual = np.max(np.abs(disk_constraint_residual(system, traj.states[:, 0])), axis=-1)
        extra_header = ["dist_EP", "constraint_residual"]
        extra = [dist_ep, residual]
    else:
        if isinstance(system, ContactSystem):
            field, g = (lambda x: contact_field(system, x)), contact_metric(system, eps)
        else:
            field, g = (lambda x: mech_field(system, x)), mech_metric(system, eps)
        dim = g.shape[0]
        if x0.size != dim or x1.size != dim:
            raise argparse.ArgumentTypeError(f"--x0 and --x1 need {dim} entries for this system")
        traj = rk4_integrate(field, np.stack([x0, x1]), args.dt, steps)
        d = pair_divergence(traj.member(0), traj.member(1), g)
        v = lyapunov_values(system, eps, traj.states[:, 0])
        extra_header, extra = [], []
        if isinstance(system, ContactSystem):
            n = system.n
            qnorm = np.linalg.norm(traj.states[:, :, : 2 * n], axis=-1).max(axis=-1)
            inside = qnorm <= cert.region
            extra_header, extra = ["in_region"], [inside]
            report["left_region"] = bool(not inside.all())

    bound = contraction_bound(d[0], traj.times, rate)
    verdict = verify_contraction_bound(d, traj.times, rate, BOUND_TOL) if d[0] > 0 else False
    out = Path(args.out)
    header = ["t", "d_G", "V", "bound", *extra_header]
    write_csv(out, header, zip(traj.times, d, v, bound, *extra))

    report["system"] = label
    report["certificate"] = cert.as_dict()
    report["bound_rate"] = rate
    report["bound_holds"] = verdict
    window = (1.0, 0.8 * args.T)
    try:
        fit = fit_rate(d, traj.times, window)
        report["fit"] = {"rate": fit.rate, "r_squared": fit.r_squared, "window": list(fit.window)}
    except (NonPositiveDistance, ValueError) as exc:
        report["fit"] = {"unavailable": str(exc)}
    if isinstance(system, ChaplyginDisk):
        report["max_constraint_residual"] = float(np.max(residual))
    report["csv"] = str(out)
    return EXIT_OK if verdict else EXIT_FAIL


def cmd_verify(args, report: Report) -> int:
    system, label = load_with_label(args.file)
    results = run_checks(system, seed_from_env())
    report["system"] = label
    report["checks"] = [
        f"{'PASS' if r.passed else 'FAIL'} {r.name}{'' if r.gating else ' (informational)'}: {r.detail}"
        for r in results
    ]
    failing = [r.name for r in results if r.gating and not r.passed]
    report["failing"] = failing
    return EXIT_FAIL if failing else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="contraction-lab", description=__doc__)
    p.add_argument("--json", action="store_true", help="emit the report as JSON")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="certify contraction at one eps")
    c.add_argument("file")
    c.add_argument("--epsilon", type=float, required=True)
    c.add_argument("--tol", type=float, default=DEFAULT_TOL)
    c.add_argument("--radius", type=float, default=None, help="contact region radius")
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("sweep", help="certify over an eps grid and write CSV")
    s.add_argument("file")
    s.add_argument("--min", type=float, required=True)
    s.add_argument("--max", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("simulate", help="integrate a trajectory pair and check the exponential bound")
    m.add_argument("file")
    m.add_argument("--epsilon", type=float, required=True)
    m.add_argument("--x0", required=True)
    m.add_argument("--x1", required=True)
    m.add_argument("--dt", type=float, default=1e-3)
    m.add_argument("--T", type=float, default=20.0)
    m.add_argument("--tol", type=float, default=DEFAULT_TOL)
    m.add_argument("--radius", type=float, default=None)
    m.add_argument("--rate", type=float, default=None, help="override the rate used in the bound")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run the property checks against a system")
    v.add_argument("file")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    report = Report(argv)
    try:
        code = args.func(args, report)
    except (ContractionLabError, argparse.ArgumentTypeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report["exit_code"] = code
    report.emit(args.json)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
