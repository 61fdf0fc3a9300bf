"""Command line entry point ``nonloc-front``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import kernel as kn
from . import output as out
from . import scenarios as scn
from . import wave1d as wv
from .errors import (AssumptionViolation, ConfigError, DisconnectedDomain, EmptyDomain, InvalidGeometry,
                     InvalidNonlinearity, NonlocFrontError, PlacementViolation, PointInsideObstacle, ZeroMass)
from .geometry import build_grid, check_j_covering
from .nonlinearity import Bistable

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_ASSUMPTION, EXIT_RUNTIME = 0, 1, 2, 3, 4
ASSUMPTION_ERRORS = (AssumptionViolation, InvalidNonlinearity, DisconnectedDomain, EmptyDomain, InvalidGeometry,
                     PointInsideObstacle, PlacementViolation, ZeroMass)


def _scenario(args) -> scn.Scenario:
    return scn.load_scenario(args.config, args.builtin)


def _out_dir(args, default: str) -> Path | None:
    if args.dry_run and not args.out:
        return None
    d = Path(args.out or default)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_wave(args) -> int:
    f = Bistable.cubic(args.theta)
    try:
        k = kn.normalize(args.kernel, args.radius, 2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.dry_run:
        return EXIT_OK
    J1 = kn.marginal(k, step=args.dz)
    profile = wv.solve_profile(J1, f)
    roots = wv.characteristic_roots(J1, profile.c, f)
    tails = wv.tail_constants(profile, roots)
    payload = {"theta": args.theta, "kernel": k.to_dict(), "dz": args.dz, "c": profile.c,
               "residual": profile.residual, "lam": roots.lam, "mu": roots.mu,
               "m_lam": roots.residual_lam, "m_mu": roots.residual_mu, "A0": tails.A0, "A1": tails.A1,
               "tail_fit_error": tails.fit_error, "z_star": wv.convexity_threshold(profile, roots)}
    h = scn.config_hash({"theta": args.theta, "kernel": k.to_dict(), "dz": args.dz})
    d = _out_dir(args, "wave-out")
    out.write_profile_csv(d / "profile.csv", profile, h)
    out.write_json(d / "roots.json", payload, h)
    print(f"c = {profile.c:.8f}  residual = {profile.residual:.3e}  lambda = {roots.lam:.8f}  mu = {roots.mu:.8f}")
    return EXIT_OK


def cmd_run(args) -> int:
    sc = _scenario(args)
    d = _out_dir(args, f"out-{sc.name}")
    res = scn.run_scenario(sc, d, threads=args.threads, dry_run=args.dry_run)
    rep = res.report
    if args.dry_run:
        print(f"{sc.name}: configuration valid ({rep['grid']['n']} cells)")
        return EXIT_OK
    line = f"{sc.name}: u in [{rep['trajectory']['min_u']:.3g}, {rep['trajectory']['max_u']:.3g}]"
    if "blocking" in rep:
        line += f"  {rep['blocking']['classification']}"
    if "speed" in rep:
        line += f"  c_est = {rep['speed']['c_est']:.6f}"
    print(line)
    return EXIT_OK


def cmd_check_sandwich(args) -> int:
    sc = _scenario(args) if (args.config or args.builtin) else scn.load_scenario(builtin="sandwich")
    if sc.initial.get("kind") != "sandwich":
        raise ConfigError("check-sandwich needs a scenario with initial kind 'sandwich'")
    d = _out_dir(args, f"out-{sc.name}")
    res = scn.run_scenario(sc, d, threads=args.threads, dry_run=args.dry_run)
    if args.dry_run:
        return EXIT_OK
    rep = res.report["sandwich"]
    print(f"min P[w+] = {min(rep['min_P_plus']):.3e}  max P[w-] = {max(rep['max_P_minus']):.3e}  "
          f"tol = {rep['tol']:.3g}  w- <= u <= w+: {rep['u_between']}  certified: {rep['certified']}")
    return EXIT_OK if rep["certified"] else EXIT_CHECK_FAILED


def cmd_check_covering(args) -> int:
    sc = _scenario(args)
    grid = build_grid(sc.domain)
    if args.dry_run:
        return EXIT_OK
    rep = check_j_covering(grid, sc.kernel, sc.metric)
    payload = {"name": sc.name, "covered_fraction": rep.covered_fraction, "rounds_used": rep.rounds_used,
               "n": grid.n}
    d = _out_dir(args, f"out-{sc.name}")
    out.write_json(d / "covering.json", payload, sc.hash)
    print(f"{sc.name}: covered_fraction = {rep.covered_fraction}  rounds = {rep.rounds_used}")
    return EXIT_OK


def _summary_row(path: Path) -> dict:
    rep = json.loads(path.read_text())
    row = {"report": str(path), "name": rep.get("name", ""), "config_hash": rep.get("config_hash", "")[:12]}
    if "trajectory" in rep:
        row["min_u"], row["max_u"] = rep["trajectory"]["min_u"], rep["trajectory"]["max_u"]
    if "blocking" in rep:
        row["classification"] = rep["blocking"]["classification"]
        row["min_probe"] = rep["blocking"]["min_probe"]
        row["min_pocket"] = rep["blocking"]["min_pocket"]
    if "speed" in rep:
        row["c_est"] = rep["speed"]["c_est"]
    if "sandwich" in rep:
        row["certified"] = rep["sandwich"]["certified"]
    return row


def cmd_report(args) -> int:
    roots = [Path(p) for p in (args.paths or [args.out or "."])]
    files = sorted(p for r in roots for p in ([r] if r.is_file() else r.rglob("report.json")))
    if not files:
        raise ConfigError("no report.json found")
    rows = [_summary_row(p) for p in files]
    cols = ["name", "config_hash", "min_u", "max_u", "classification", "min_probe", "min_pocket", "c_est",
            "certified"]
    cols = [c for c in cols if any(c in r for r in rows)]
    lines = [",".join(cols)] + [",".join(str(r.get(c, "")) for c in cols) for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "summary.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", help="scenario JSON file")
    src.add_argument("--builtin", help=f"builtin scenario: {', '.join(sorted(scn.BUILTINS))}")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads for assembly")
    common.add_argument("--dry-run", action="store_true", help="validate the configuration only")

    p = argparse.ArgumentParser(prog="nonloc-front", description="Bistable nonlocal fronts around obstacles.")
    sub = p.add_subparsers(dest="command", required=True)
    w = sub.add_parser("wave", parents=[common], help="travelling wave profile, speed and tail rates")
    w.add_argument("--theta", type=float, default=0.3)
    w.add_argument("--kernel", default="gaussian")
    w.add_argument("--radius", type=float, default=1.0)
    w.add_argument("--dz", type=float, default=0.025)
    w.set_defaults(func=cmd_wave)
    sub.add_parser("run", parents=[common], help="run a scenario").set_defaults(func=cmd_run)
    sub.add_parser("check-sandwich", parents=[common], help="certify the sub/supersolution pair") \
        .set_defaults(func=cmd_check_sandwich)
    sub.add_parser("check-covering", parents=[common], help="iterate kernel supports over the grid") \
        .set_defaults(func=cmd_check_covering)
    r = sub.add_parser("report", parents=[common], help="aggregate report.json files into a table")
    r.add_argument("paths", nargs="*")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    needs_source = args.command in ("run", "check-covering")
    if needs_source and not (args.config or args.builtin):
        print("error: give --config or --builtin", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ASSUMPTION_ERRORS as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except NonlocFrontError as exc:
        print(f"runtime error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
