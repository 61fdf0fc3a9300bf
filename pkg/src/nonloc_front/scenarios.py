"""Scenario configuration, built-in scenarios and the validate -> assemble -> integrate -> analyze pipeline."""
from __future__ import annotations

import copy
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis as an
from . import kernel as kn
from . import output as out
from . import solver as sv
from . import subsuper as ss
from . import wave1d as wv
from .errors import AssumptionViolation, ConfigError, InvalidNonlinearity, NonlocFrontError
from .geometry import Domain, Grid, Metric, build_grid, obstacle_from_dict
from .nonlinearity import Bistable, validate
from .operator import PADDINGS, assemble

TOP_KEYS = {"name", "domain", "obstacle", "metric", "kernel", "nonlinearity", "scheme", "padding",
            "initial", "t_final", "snapshots", "analysis", "heatmaps"}
ANALYSIS_KEYS = {"levels", "rays", "probe", "pocket", "A_values", "steady", "speed", "frames", "sandwich",
                 "invasion_threshold", "blocking_threshold", "probe_radius"}

_BASE = {
    "kernel": {"profile": "gaussian", "radius": 1.0},
    "nonlinearity": {"kind": "cubic", "theta": 0.3},
    "metric": {"kind": "euclidean"},
    "padding": "reflect",
    "heatmaps": True,
}


def _builtin(**kw) -> dict:
    d = copy.deepcopy(_BASE)
    d.update(kw)
    return d


BUILTINS: dict[str, dict] = {
    "fig-disk": _builtin(
        name="fig-disk",
        domain={"box": [-15, 15, -15, 15], "h": 0.25},
        obstacle={"builtin": "disk", "params": {"center": [0, 0], "radius": 4.0}},
        scheme={"scheme": "imex", "dt": 0.05},
        initial={"kind": "heaviside", "x1": 12.0},
        t_final=1000.0,
        snapshots=[0, 150, 300, 450, 600, 750, 900, 1000],
        analysis={"levels": [0.1, 0.5, 0.9], "steady": {"tol": 1e-6, "t_max": 500.0},
                  "A_values": [0, 1, 2, 3, 5, 7.5, 10, 15, 20]},
    ),
    "fig-annulus": _builtin(
        name="fig-annulus",
        domain={"box": [-11, 11, -11, 11], "h": 0.25},
        obstacle={"builtin": "annulus_channel",
                  "params": {"r_in": 2.0, "r_out": 5.0, "channel_width": 0.6, "channel_angle": 0.0}},
        scheme={"scheme": "imex", "dt": 0.1},
        initial={"kind": "heaviside", "x1": 9.0},
        t_final=280.0,
        snapshots=[0, 40, 80, 120, 160, 200, 240, 280],
        analysis={"levels": [0.1, 0.5, 0.9], "steady": {"tol": 1e-6, "t_max": 1000.0},
                  "pocket": {"disk": {"center": [0, 0], "radius": 2.0}}},
    ),
    "fig-square-annulus-geo": _builtin(
        name="fig-square-annulus-geo",
        domain={"box": [-5, 5, -5, 5], "h": 0.25},
        obstacle={"builtin": "square_annulus_channel",
                  "params": {"inner": 2.5, "outer": 3.0, "channel_width": 0.6, "side": "right"}},
        metric={"kind": "geodesic"},
        scheme={"scheme": "imex", "dt": 0.1},
        initial={"kind": "heaviside", "x1": 4.0},
        t_final=2000.0,
        snapshots=[0, 300, 700, 1100, 1200, 1300, 1500, 1900, 2000],
        analysis={"levels": [0.5], "steady": {"tol": 1e-6, "t_max": 500.0},
                  "pocket": {"box": [-2.5, 2.5, -2.5, 2.5]}},
    ),
    "fig-ellipses": _builtin(
        name="fig-ellipses",
        domain={"box": [-50, 30, -15, 15], "h": 0.25},
        obstacle={"builtin": "ellipse_cluster", "params": {}},
        scheme={"scheme": "imex", "dt": 0.075},
        initial={"kind": "heaviside", "x1": 27.0},
        t_final=750.0,
        snapshots=[0, 50, 100, 200, 300, 400, 450, 500, 550, 600, 650, 700, 750],
        analysis={"levels": [0.1, 0.5, 0.9]},
    ),
    "planar-speed": _builtin(
        name="planar-speed",
        domain={"box": [-40, 10, -4, 4], "h": 0.25},
        obstacle=None,
        scheme={"scheme": "explicit", "dt": 0.05},
        initial={"kind": "heaviside", "x1": 8.0},
        t_final=400.0,
        snapshots=[10.0 * k for k in range(41)],
        analysis={"levels": [0.5], "speed": {"t_min": 100.0}},
        heatmaps=False,
    ),
    "front-disk": _builtin(
        name="front-disk",
        domain={"box": [-40, 16, -10, 10], "h": 0.25},
        obstacle={"builtin": "disk", "params": {"center": [0, 0], "radius": 2.0}},
        scheme={"scheme": "explicit", "dt": 0.05},
        initial={"kind": "planar_wave", "x1": 6.0},
        t_final=400.0,
        snapshots=[10.0 * k for k in range(41)],
        analysis={"levels": [0.1, 0.5, 0.9], "frames": {"levels": [0.1, 0.5, 0.9], "fit_fraction": 0.5},
                  "speed": {"t_min": 0.0}},
        heatmaps=False,
    ),
    "sandwich": _builtin(
        name="sandwich",
        domain={"box": [-10, 16, -4, 4], "h": 0.25},
        obstacle={"builtin": "disk", "params": {"center": [-4, 0], "radius": 1.5}},
        scheme={"scheme": "explicit", "dt": 0.05},
        initial={"kind": "sandwich"},
        analysis={"sandwich": {"offsets": [-20, -10, -5, -2, 0], "safety": 2.0}},
        heatmaps=False,
    ),
}
BUILTINS["fig-square-annulus-euclid"] = copy.deepcopy(BUILTINS["fig-square-annulus-geo"])
BUILTINS["fig-square-annulus-euclid"].update(name="fig-square-annulus-euclid", metric={"kind": "euclidean"})


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=float).encode()).hexdigest()


@dataclass
class Scenario:
    name: str
    config: dict
    domain: Domain
    metric: Metric
    kernel: kn.RadialKernel
    f: Bistable
    scheme: sv.SchemeConfig
    padding: str | None
    initial: dict
    t_final: float | None
    snapshots: list
    analysis: dict
    heatmaps: bool = True
    hash: str = field(default="")

    @classmethod
    def from_dict(cls, config: dict) -> "Scenario":
        if not isinstance(config, dict):
            raise ConfigError("scenario config must be a JSON object")
        unknown = set(config) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        an_unknown = set(config.get("analysis", {})) - ANALYSIS_KEYS
        if an_unknown:
            raise ConfigError(f"unknown analysis keys {sorted(an_unknown)}")
        try:
            dom = config["domain"]
            box = tuple(float(v) for v in dom["box"])
            h = float(dom.get("h", 0.25))
            obstacle = obstacle_from_dict(config.get("obstacle"))
            domain = Domain(box, obstacle, h)
            metric = Metric.from_dict(config.get("metric", {"kind": "euclidean"}))
            kernel = kn.from_dict(config.get("kernel", {}), domain.dim)
            f = Bistable.from_dict(config.get("nonlinearity", {"kind": "cubic", "theta": 0.3}))
            scheme = sv.SchemeConfig(**config.get("scheme", {}))
            initial = dict(config.get("initial", {"kind": "heaviside", "x1": 0.0}))
            t_final = config.get("t_final")
            snapshots = [float(s) for s in config.get("snapshots", [])]
        except InvalidNonlinearity as exc:
            raise AssumptionViolation(str(exc)) from exc
        except NonlocFrontError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed scenario config: {exc!r}") from exc
        if len(box) not in (2, 4):
            raise ConfigError("domain box needs 2 (1D) or 4 (2D) numbers")
        if initial.get("kind") not in ("heaviside", "planar_wave", "sandwich"):
            raise ConfigError(f"unknown initial kind {initial.get('kind')!r}")
        if config.get("padding") not in PADDINGS:
            raise ConfigError(f"padding must be one of {PADDINGS}")
        if initial["kind"] != "sandwich" and t_final is None:
            raise ConfigError("t_final is required")
        return cls(config.get("name", "scenario"), config, domain, metric, kernel, f, scheme,
                   config.get("padding"), initial, None if t_final is None else float(t_final),
                   snapshots, dict(config.get("analysis", {})), bool(config.get("heatmaps", True)),
                   config_hash(config))


def load_scenario(path=None, builtin: str | None = None) -> Scenario:
    """Parse a JSON file or look up a builtin name."""
    if (path is None) == (builtin is None):
        raise ConfigError("give exactly one of a config path or a builtin name")
    if builtin is not None:
        if builtin not in BUILTINS:
            raise ConfigError(f"unknown builtin {builtin!r}; choose from {sorted(BUILTINS)}")
        return Scenario.from_dict(copy.deepcopy(BUILTINS[builtin]))
    try:
        config = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return Scenario.from_dict(config)


def region_mask(grid: Grid, spec) -> np.ndarray:
    """Cells in ``{"disk": {center, radius}}``, ``{"box": [a1, b1, a2, b2]}`` or everywhere."""
    x = grid.centers
    if spec is None or spec == "all":
        return np.ones(grid.n, dtype=bool)
    if "disk" in spec:
        c = np.asarray(spec["disk"]["center"], dtype=float)
        return np.hypot(x[:, 0] - c[0], x[:, 1] - c[1]) < float(spec["disk"]["radius"])
    if "box" in spec:
        a1, b1, a2, b2 = map(float, spec["box"])
        return (x[:, 0] > a1) & (x[:, 0] < b1) & (x[:, 1] > a2) & (x[:, 1] < b2)
    raise ConfigError(f"unknown region spec {spec!r}")


def lattice_wave(sc: Scenario) -> wv.WaveProfile:
    """Travelling wave of the lattice marginal at the scenario's spacing and time step."""
    J1 = kn.lattice_marginal(sc.kernel, sc.domain.h)
    return wv.solve_profile(J1, sc.f, wv.WaveConfig(dt=min(sc.scheme.dt, 0.05)))


def continuum_wave(sc: Scenario, dz: float = 0.025) -> wv.WaveProfile:
    return wv.solve_profile(kn.marginal(sc.kernel, step=dz), sc.f)


@dataclass
class ScenarioResult:
    scenario: Scenario
    report: dict
    grid: Grid | None = None
    op: object = None
    trajectory: sv.Trajectory | None = None
    steady: an.SteadyResult | None = None
    tracks: list = field(default_factory=list)


def _check_assumptions(sc: Scenario, jdelta_inf: float | None, jdelta_sup: float = 1.0) -> dict:
    rep = validate(sc.f, jdelta_inf if jdelta_inf is not None else np.inf, jdelta_sup)
    msgs = [m for m in rep.messages if jdelta_inf is not None or not m.startswith("nondegeneracy")]
    ok = rep.c2_ok and rep.c5_ok and (jdelta_inf is None or rep.nondegenerate_ok)
    if not ok:
        raise AssumptionViolation("; ".join(msgs))
    return {"c2": rep.c2_ok, "c5": rep.c5_ok,
            "nondegenerate": rep.nondegenerate_ok if jdelta_inf is not None else "deferred",
            "integral": rep.integral, "max_fprime": rep.max_fprime, "jdelta_inf": jdelta_inf}


def prepare(sc: Scenario, threads: int = 1, dry_run: bool = False):
    """Validate the scenario; unless ``dry_run``, assemble the operator too."""
    grid = build_grid(sc.domain)
    report = {"name": sc.name, "grid": {"n": grid.n, "h": grid.h, "components": grid.components}}
    if dry_run:
        report["validation"] = _check_assumptions(sc, None)
        return grid, None, report
    if sc.padding in ("planar", "extend_planar"):
        # ghost cells carry the wave that starts at the initial front position
        wave = lattice_wave(sc)
        x1_0 = float(sc.initial.get("x1", 0.0))
        op = assemble(grid, sc.kernel, sc.metric, padding=sc.padding, profile=lambda x: wave(x - x1_0),
                      c=wave.c, threads=threads)
    else:
        op = assemble(grid, sc.kernel, sc.metric, padding=sc.padding, threads=threads)
    jd = kn.jdelta_field(grid, sc.metric, sc.kernel, W=op.W, margin=sc.kernel.radius)
    report["validation"] = _check_assumptions(sc, jd.inf, jd.sup)
    report["operator"] = {**op.stats, "jdelta_inf": jd.inf, "jdelta_sup": jd.sup}
    return grid, op, report


def _sandwich(sc: Scenario, grid, op, report) -> tuple[sv.Trajectory, ss.SandwichReport]:
    spec = sc.analysis.get("sandwich", {})
    ss.check_placement(grid, sc.kernel.radius)
    profile = lattice_wave(sc)
    roots = wv.characteristic_roots(profile.marginal, profile.c, sc.f)
    tails = wv.tail_constants(profile, roots)
    z_star = wv.convexity_threshold(profile, roots)
    pair, consts = ss.build_pair(profile, sc.f, roots, tails, z_star, safety=float(spec.get("safety", 2.0)),
                                 k=spec.get("k"))
    offsets = sorted(float(o) for o in spec.get("offsets", [-20, -10, -5, -2, 0]))
    times = [pair.T1 + o for o in offsets]
    tol = float(spec.get("tol") or 20.0 * (grid.h + sc.scheme.dt))
    u0 = pair.w_minus(times[0], grid.x1)
    traj = sv.run(op, sc.f, u0, times[0], times[-1], times, sc.scheme)
    cert = ss.certify_sandwich(op, sc.f, pair, times, tol, traj.states)
    report["wave"] = {"c": profile.c, "residual": profile.residual, "lam": roots.lam, "mu": roots.mu}
    report["sandwich"] = {**cert.to_dict(), "k": pair.shift.k, "k_terms": list(consts.k_terms),
                          "rho": consts.rho, "T": pair.shift.T, "T1": pair.T1, "z_star": z_star}
    return traj, cert


def _probe_radius(sc: Scenario, A: dict) -> float:
    """Radius beyond which the steady state should be near 1 (default: obstacle extent + R)."""
    if "probe_radius" in A:
        return float(A["probe_radius"])
    obs = sc.domain.obstacle
    if obs.empty:
        return 0.0
    b = np.asarray(obs.bounds(), dtype=float)
    return float(np.max(np.abs(b))) * np.sqrt(2) + sc.kernel.radius


def run_scenario(sc: Scenario, out_dir=None, threads: int = 1, dry_run: bool = False) -> ScenarioResult:
    """validate -> assemble -> integrate -> analyze -> write."""
    t_start = time.perf_counter()
    grid, op, report = prepare(sc, threads, dry_run)
    if dry_run:
        report["dry_run"] = True
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            out.write_json(Path(out_dir) / "report.json", report, sc.hash)
        return ScenarioResult(sc, report, grid)

    A = sc.analysis
    x1_0 = float(sc.initial.get("x1", 0.0))
    profile = None
    if sc.initial["kind"] == "sandwich":
        traj, _ = _sandwich(sc, grid, op, report)
        shift = 0.0
    else:
        need_wave = sc.initial["kind"] == "planar_wave" or any(k in A for k in ("frames", "A_values", "speed"))
        if need_wave:
            profile = lattice_wave(sc)
            report["wave"] = {"c_lattice": profile.c, "residual": profile.residual}
        if sc.initial["kind"] == "planar_wave":
            u0 = np.asarray(profile(grid.x1 - x1_0), dtype=float)
        else:
            u0 = sv.heaviside_initial(grid, x1_0, sc.initial.get("smoothing_width"))
        traj = sv.run(op, sc.f, u0, 0.0, sc.t_final, sc.snapshots, sc.scheme)
        shift = -x1_0
    report["trajectory"] = {**traj.report(), "bounds_ok": bool(traj.min_u >= -1e-12 and traj.max_u <= 1 + 1e-12),
                            "min_increment": traj.min_increment, "steps": traj.steps}

    levels = [float(v) for v in A.get("levels", [])]
    tracks = [an.track_front(grid, traj.times, traj.states, lv, A.get("rays")) for lv in levels]
    result = ScenarioResult(sc, report, grid, op, traj, tracks=tracks)

    if "speed" in A and tracks:
        sp = A["speed"]
        track = next((t for t in tracks if t.level == 0.5), tracks[0])
        est = an.mean_speed(track, t_min=sp.get("t_min"), t_max=sp.get("t_max"))
        ref = continuum_wave(sc)
        report["speed"] = {"c_est": est.c_est, "r2": est.r2, "n_points": est.n_points, "c_wave": ref.c,
                           "c_lattice": profile.c, "relative_error": abs(est.c_est - ref.c) / ref.c}

    if "frames" in A:
        fr = A["frames"]
        n_fit = max(int(len(traj.times) * float(fr.get("fit_fraction", 0.5))), 1)
        obs = grid.obstacle
        R = sc.kernel.radius
        gamma1 = obs.bounds()[0] - R if not obs.empty else sc.domain.box[1]
        rows = []
        for lv in fr.get("levels", levels):
            frames = an.fit_level_frames(grid, traj.times[:n_fit], traj.states[:n_fit], lv, profile.c, gamma1)
            viol = an.level_frame_violations(grid, traj.times[n_fit:], traj.states[n_fit:], frames, profile.c)
            rows.append({"level": lv, "gamma0": frames.gamma0, "gamma1": frames.gamma1,
                         "gamma2": frames.gamma2, "violations": viol})
        report["frames"] = {"fit_snapshots": n_fit, "verify_snapshots": len(traj.times) - n_fit, "rows": rows}

    if "steady" in A:
        st_spec = A["steady"]
        steady = an.steady_state(op, sc.f, traj.states[-1], sc.scheme, tol=float(st_spec.get("tol", 1e-6)),
                                 t_max=float(st_spec.get("t_max", 1000.0)), raise_on_fail=False,
                                 probe_radius=_probe_radius(sc, A))
        result.steady = steady
        probe = region_mask(grid, A.get("probe"))
        pocket = region_mask(grid, A["pocket"]) if "pocket" in A else None
        if steady.converged:
            blk = an.classify_liouville(steady.u_inf, probe, pocket, float(A.get("invasion_threshold", 0.95)),
                                        float(A.get("blocking_threshold", 0.5)),
                                        probe=json.dumps(A.get("probe", "all")), residual=steady.residual)
        else:
            blk = an.BlockingReport("Indeterminate", float(steady.u_inf[probe].min()),
                                    None if pocket is None else float(steady.u_inf[pocket].min()),
                                    json.dumps(A.get("probe", "all")), steady.residual)
        report["steady"] = {"residual": steady.residual, "converged": steady.converged, "t_used": steady.t_used,
                            "change_rate": steady.change_rate, "far_field_min": steady.far_field_min,
                            "far_field_ok": steady.far_field_ok, "min": float(steady.u_inf.min()),
                            "max": float(steady.u_inf.max())}
        report["blocking"] = blk.to_dict()
        if "A_values" in A:
            report["transition"] = an.transition_front_diag(grid, traj.times, traj.states, steady.u_inf,
                                                            profile.c, A["A_values"], shift=shift)

    report["wall_time"] = time.perf_counter() - t_start
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def write_outputs(result: ScenarioResult, out_dir):
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    sc, grid, traj, h = result.scenario, result.grid, result.trajectory, result.scenario.hash
    for t, u in zip(traj.times, traj.states):
        stem = out.snapshot_name(t)
        out.write_snapshot_csv(d / f"{stem}.csv", grid, t, u, h)
        if sc.heatmaps and grid.dim == 2:
            out.write_heatmap(d / stem, grid, u, h)
    if result.steady is not None:
        out.write_snapshot_csv(d / "steady.csv", grid, float("inf"), result.steady.u_inf, h)
        if sc.heatmaps and grid.dim == 2:
            out.write_heatmap(d / "steady", grid, result.steady.u_inf, h)
    if result.tracks:
        out.write_front_csv(d / "fronts.csv", result.tracks, h)
    out.write_json(d / "report.json", {**result.report, "config": sc.config}, h)
