"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import time

import numpy as np
import pytest

from nonloc_front import cli
from nonloc_front import kernel as kn
from nonloc_front import scenarios as scn
from nonloc_front import wave1d as wv
from nonloc_front.geometry import (Disk, Domain, Metric, Obstacle, annulus_channel, build_grid,
                                   check_j_covering, disk_obstacle, geodesic_distance)
from nonloc_front.nonlinearity import Bistable
from nonloc_front.operator import assemble
from nonloc_front.solver import CauchyState, SchemeConfig, cfl_number, step

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    """Builtin scenario runs shared by several criteria (each run once)."""
    cache = {}

    def get(name):
        if name not in cache:
            d = tmp_path_factory.mktemp(name)
            t0 = time.perf_counter()
            res = scn.run_scenario(scn.load_scenario(builtin=name), d)
            cache[name] = (res, d, time.perf_counter() - t0)
        return cache[name]
    return get


def test_c01_wave_residual(criterion):
    t0 = time.perf_counter()
    f = Bistable.cubic(0.3)
    J1 = kn.marginal(kn.normalize("gaussian", 1.0, 2), step=0.025)
    p = wv.solve_profile(J1, f)
    elapsed = time.perf_counter() - t0
    res = float(np.abs(wv.wave_residual(p.z, p.phi, p.c, J1, f)).max())
    criterion(1, "travelling-wave residual", res <= 10 * p.dz and elapsed <= 10,
              f"residual={res:.3e} bound={10 * p.dz:.3g} c={p.c:.8f} time={elapsed:.2f}s")


def test_c02_balanced_symmetry(criterion):
    J1 = kn.marginal(kn.normalize("gaussian", 1.0, 2), step=0.025)
    p = wv.solve_profile(J1, Bistable.cubic(0.5))
    sym = float(np.max(np.abs(p(p.z) + p(-p.z) - 1.0)))
    criterion(2, "balanced symmetry", abs(p.c) <= 1e-3 and sym <= 1e-3, f"|c|={abs(p.c):.2e} odd-defect={sym:.2e}")


def test_c03_characteristic_roots(criterion, wave, cubic):
    r = wv.characteristic_roots(wave.marginal, wave.c, cubic)
    m_left, _ = wv.characteristic_function(wave.marginal, wave.c, cubic.fprime0, "left")
    m_right, _ = wv.characteristic_function(wave.marginal, wave.c, cubic.fprime1, "right")
    ok = (abs(m_left(r.lam)) <= 1e-10 and abs(m_right(r.mu)) <= 1e-10
          and abs(m_left(0.0) - cubic.fprime0) <= 1e-12 and abs(m_right(0.0) - cubic.fprime1) <= 1e-12)
    criterion(3, "characteristic roots", ok,
              f"lam={r.lam:.8f} mu={r.mu:.8f} |m(lam)|={abs(m_left(r.lam)):.1e} |m(mu)|={abs(m_right(r.mu)):.1e} "
              f"m(0)-f'(0)={m_left(0.0) - cubic.fprime0:.1e}")


def test_c04_geodesic_oracle(criterion):
    exact = 2 * np.sqrt(3) + np.pi / 3
    t0 = time.perf_counter()
    errs = []
    for s in (0.08, 0.04, 0.02):
        obs = Obstacle((Disk((0.0, 0.0), 1.0),), s)
        errs.append(geodesic_distance((-2.0, 0.0), (2.0, 0.0), obs) - exact)
    elapsed = time.perf_counter() - t0
    rates = [np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])]
    ok = abs(errs[-1]) / exact <= 0.01 and min(rates) >= 0.95 and elapsed <= 1.0
    criterion(4, "geodesic oracle", ok,
              f"rel.err={abs(errs[-1]) / exact:.2e} orders={rates[0]:.2f},{rates[1]:.2f} time={elapsed:.3f}s")


def test_c05_j_covering(criterion, gauss):
    g1 = build_grid(Domain((-7, 7, -7, 7), annulus_channel(2.0, 5.0, channel_width=0.6), 0.25))
    a = check_j_covering(g1, gauss, Metric.euclidean()).covered_fraction
    g2 = build_grid(Domain((-6, 6, -6, 6), disk_obstacle((0.0, 0.0), 2.0), 0.25))
    b = check_j_covering(g2, gauss, Metric.geodesic()).covered_fraction
    g3 = build_grid(Domain((-7, 7, -7, 7), annulus_channel(2.0, 5.0, channel_width=0.0), 0.25),
                    require_connected=False)
    c = check_j_covering(g3, gauss, Metric.geodesic()).covered_fraction
    criterion(5, "J-covering", a == 1.0 and b == 1.0 and c < 1.0,
              f"connected+euclidean={a} disk+geodesic={b} disconnected={c:.4f}")


def test_c06_comparison_principle(criterion, gauss, cubic, runs):
    g = build_grid(Domain((-6, 6, -6, 6), disk_obstacle((0.0, 0.0), 2.0), 0.25))
    op = assemble(g, gauss, Metric.geodesic(), padding="reflect")
    dt = 0.05
    cfg = SchemeConfig("explicit", dt=dt)
    assert cfl_number(op, cubic, dt) <= 1
    rng = np.random.default_rng(2024)
    worst = -np.inf
    violations = 0
    for _ in range(100):
        lo = rng.random(op.n)
        hi = np.minimum(lo + rng.random(op.n) * rng.random(), 1.0)
        a, b = CauchyState(0.0, lo), CauchyState(0.0, hi)
        for _ in range(200):
            a, b = step(op, cubic, a, cfg), step(op, cubic, b, cfg)
        gap = float((a.u - b.u).max())
        worst = max(worst, gap)
        violations += gap > 1e-12
    names = ("sandwich", "planar-speed", "front-disk", "fig-annulus", "fig-disk")
    bounds = {n: runs(n)[0].report["trajectory"]["bounds_ok"] for n in names}
    criterion(6, "discrete comparison principle", violations == 0 and all(bounds.values()),
              f"violations={violations} max(u-v)={worst:.2e} bounds_ok={all(bounds.values())}")


def test_c07_sandwich(criterion, tmp_path, capsys):
    code = cli.main(["check-sandwich", "--builtin", "sandwich", "--out", str(tmp_path)])
    out = capsys.readouterr().out.strip()
    criterion(7, "sandwich certification", code == 0, out)


def test_c08_speed_recovery(criterion, runs):
    res, _, elapsed = runs("planar-speed")
    sp = res.report["speed"]
    ok = sp["relative_error"] <= 0.05 and sp["r2"] >= 0.999 and elapsed <= 300
    criterion(8, "speed recovery", ok, f"c_est={sp['c_est']:.6f} c={sp['c_wave']:.6f} "
              f"rel.err={sp['relative_error']:.3%} r2={sp['r2']:.7f} time={elapsed:.1f}s")


def test_c09_liouville_dichotomy(criterion, runs):
    disk, _, t_disk = runs("fig-disk")
    ann, _, t_ann = runs("fig-annulus")
    bd, ba = disk.report["blocking"], ann.report["blocking"]
    ok = (bd["classification"] == "Invasion" and bd["min_probe"] >= 0.95
          and ba["classification"] == "Blocking" and ba["min_pocket"] < 0.5 and max(t_disk, t_ann) <= 900)
    criterion(9, "Liouville dichotomy", ok,
              f"fig-disk {bd['classification']} min={bd['min_probe']:.6f} ({t_disk:.0f}s); "
              f"fig-annulus {ba['classification']} pocket min={ba['min_pocket']:.4f} ({t_ann:.0f}s)")


def test_c10_transition_front(criterion, runs):
    tr = runs("fig-disk")[0].report["transition"]
    front, rear = np.array(tr["front_gap"]), np.array(tr["rear_sup"])
    ok = np.all(np.diff(front) <= 0) and np.all(np.diff(rear) <= 0) and rear[-1] <= 0.05
    criterion(10, "transition-front diagnostics", bool(ok),
              f"A={tr['A']} front_gap[-1]={front[-1]:.2e} rear_sup[-1]={rear[-1]:.2e}")


def test_c11_level_set_frames(criterion, runs):
    fr = runs("front-disk")[0].report["frames"]
    rows = {r["level"]: r["violations"]["total"] for r in fr["rows"]}
    ok = set(rows) == {0.1, 0.5, 0.9} and all(v == 0 for v in rows.values())
    criterion(11, "super-level set frames", ok,
              f"violations={rows} fit={fr['fit_snapshots']} verify={fr['verify_snapshots']}")


@pytest.mark.parametrize("name", ["sandwich", "fig-annulus"])
def test_c12_determinism(criterion, runs, tmp_path, name):
    _, first, _ = runs(name)
    scn.run_scenario(scn.load_scenario(builtin=name), tmp_path)
    files = sorted(p.name for p in first.glob("*.csv"))
    same = [p for p in files if (first / p).read_bytes() == (tmp_path / p).read_bytes()]
    criterion(12, f"determinism ({name})", len(files) > 0 and len(same) == len(files),
              f"{len(same)}/{len(files)} CSV files identical")
