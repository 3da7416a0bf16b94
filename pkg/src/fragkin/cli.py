"""Batch front end: ``fragkin {run, estimate, refine, validate}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from . import diagnostics as diag
from .config import ScenarioConfig, load_scenario
from .errors import ConfigError, ContractionError, ConvergenceError, FragkinError
from .kernels import verify_hypotheses
from .solver import estimate_for_state, kernel_sups, build_operator, solve
from .state import snapshots_to_csv

__all__ = ["main", "build_parser", "cmd_run", "cmd_estimate", "cmd_refine", "cmd_validate"]

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3


def _json_default(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _finite(obj):
    """Replace non-finite floats by their repr so the JSON stays standard."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_finite(json.loads(json.dumps(obj, default=_json_default, allow_nan=True))), indent=2, sort_keys=True) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _out_dir(args, cfg: ScenarioConfig) -> Path:
    env = os.environ.get("FRAGKIN_OUT")
    if env:
        return Path(env)
    if args.out:
        return Path(args.out)
    return Path(cfg.output_dir)


def moments_csv(traj, r: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", f"N_-{r:g}", "N_0", "N_1", "N_2"])
    cols = [traj.moments(p) for p in (-r, 0.0, 1.0, 2.0)]
    for i, t in enumerate(traj.times):
        w.writerow([repr(float(t))] + [repr(float(c[i])) for c in cols])
    return buf.getvalue()


def run_diagnostics(traj, cfg: ScenarioConfig) -> dict:
    """Checks written to diagnostics.json; ``pass`` aggregates them."""
    reports = diag.moment_bounds_check(traj, cfg.r)
    drift = diag.mass_drift(traj)
    balance = diag.mass_balance(traj)
    negatives = sum(e["negative_count"] for e in traj.slab_events)
    out = {
        "mass_drift": drift,
        "mass_balance_defect": balance,
        "lost_mass": float(traj.lost_mass[-1]),
        "negative_values": negatives,
        "moment_bounds_check": [r.to_dict() for r in reports],
    }
    ok = all(r.passed for r in reports) and balance <= 1e-6 and negatives == 0
    if traj.twin is not None:
        sigma = traj.config.collision.sigma
        phi = diag.uniqueness_distance(traj, traj.twin, cfg.lam_u, cfg.theta_u, sigma)
        psi = diag.uniqueness_sum(traj, traj.twin, cfg.lam_u, cfg.theta_u)
        rel = diag.sup_relative_difference(traj, traj.twin)
        out["cross_check"] = {
            "sup_relative_difference": rel,
            "phi": phi,
            "psi": psi,
            "rk4_clamp_total": traj.twin.clamp_total,
        }
    out["pass"] = bool(ok)
    return out


def cmd_run(args) -> int:
    cfg = load_scenario(args.config)
    scfg = cfg.solver_config()
    traj = solve(scfg)
    out = _out_dir(args, cfg)
    write_atomic(out / "trajectory.csv", snapshots_to_csv(traj.snapshots))
    write_atomic(out / "moments.csv", moments_csv(traj, cfg.r))
    events = {
        "events": traj.events,
        "lost_mass": traj.lost_mass,
        "slabs": len(traj.slab_events),
        "twin_events": traj.twin.events if traj.twin is not None else [],
    }
    write_atomic(out / "events.json", dumps(events))
    d = run_diagnostics(traj, cfg)
    write_atomic(out / "diagnostics.json", dumps(d))
    print(f"run: {len(traj.snapshots)} snapshots, mass drift {d['mass_drift']:.3e}, {'PASS' if d['pass'] else 'FAIL'}")
    return EXIT_OK if d["pass"] else EXIT_CHECKS


def cmd_estimate(args) -> int:
    cfg = load_scenario(args.config)
    scfg = cfg.solver_config()
    op = build_operator(scfg)
    state = scfg.initial.build(op.grid)
    est = estimate_for_state(scfg, state, sups=kernel_sups(scfg, op.grid, op.table))
    text = dumps(est.to_dict())
    write_atomic(_out_dir(args, cfg) / "estimate.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def _parse_n_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"--n-list: expected comma-separated numbers, got {text!r}") from None


def cmd_refine(args) -> int:
    cfg = load_scenario(args.config)
    ns = _parse_n_list(args.n_list) if args.n_list else (cfg.n_list or (cfg.n,))
    if not ns:
        raise ConfigError("--n-list: empty list")
    window = cfg.window or (1.0 / min(ns), min(ns))
    scfg = cfg.solver_config(cross_check=False)
    try:
        table = diag.refinement_study(scfg, ns, window, workers=args.threads)
    except FragkinError as exc:
        if isinstance(exc, (ConvergenceError, ContractionError)):
            raise
        raise ConfigError(str(exc)) from None
    write_atomic(_out_dir(args, cfg) / "refine.json", dumps(table.to_dict()))
    print(f"refine: n = {', '.join(f'{n:g}' for n in ns)}; sup differences {table.sup_differences}; cauchy {table.cauchy}")
    return EXIT_OK if table.cauchy else EXIT_CHECKS


def cmd_validate(args) -> int:
    cfg = load_scenario(args.config)
    domain = (1.0 / cfg.n, cfg.n)
    if args.domain:
        lo, hi = _parse_n_list(args.domain)
        domain = (lo, hi)
    report = verify_hypotheses(cfg.collision_spec(), cfg.fragmentation_spec(), domain=domain)
    print(report.format())
    return EXIT_OK if report.passed else EXIT_CHECKS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fragkin", description="Collision-induced fragmentation solver and diagnostics.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="scenario file")
        sp.add_argument("--out", help="output directory (FRAGKIN_OUT overrides)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for batched solves")
        sp.add_argument("--seed", type=int, default=None, help="reserved; the solver is deterministic")

    for name, func, help_ in (
        ("run", cmd_run, "solve and write trajectory, moments, events and diagnostics"),
        ("estimate", cmd_estimate, "print the contraction constants for the initial data"),
        ("refine", cmd_refine, "truncation refinement study over several n"),
        ("validate", cmd_validate, "check the kernel hypotheses"),
    ):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.set_defaults(func=func)
        if name == "refine":
            sp.add_argument("--n-list", help="comma-separated truncation indices, e.g. 4,8,16")
        if name == "validate":
            sp.add_argument("--domain", help="lo,hi sampling domain (default [1/n, n])")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for p in exc.problems:
            print(f"  {p}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, ContractionError) as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except FragkinError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
