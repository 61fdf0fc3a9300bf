import numpy as np
import pytest

from nonloc_front import scenarios as scn
from nonloc_front import subsuper as ss
from nonloc_front import wave1d as wv
from nonloc_front.errors import OutOfValidity, PlacementViolation
from nonloc_front.geometry import Domain, Metric, Obstacle, build_grid, disk_obstacle
from nonloc_front.operator import assemble
from nonloc_front.solver import SchemeConfig, run


@pytest.fixture(scope="module")
def setup():
    sc = scn.load_scenario(builtin="sandwich")
    grid, op, _ = scn.prepare(sc)
    profile = scn.lattice_wave(sc)
    roots = wv.characteristic_roots(profile.marginal, profile.c, sc.f)
    tails = wv.tail_constants(profile, roots)
    z_star = wv.convexity_threshold(profile, roots)
    pair, consts = ss.build_pair(profile, sc.f, roots, tails, z_star)
    return sc, op, profile, roots, tails, z_star, pair, consts


def times_for(pair):
    return [pair.T1 + o for o in (-20, -10, -5, -2, 0)]


def test_front_shift_derivative(setup):
    pair = setup[6]
    sh = pair.shift
    t = np.linspace(pair.T1 - 30, pair.T1, 7)
    fd = (sh.xi(t + 1e-5) - sh.xi(t - 1e-5)) / 2e-5
    assert np.allclose(sh.xi_dot(t), fd, rtol=1e-6)
    assert sh.xi(sh.T - 200) < 1e-6
    with pytest.raises(OutOfValidity):
        sh.xi(sh.T)


def test_T1_conditions(setup):
    sc, _, profile, _, _, z_star, pair, _ = setup
    mp, mm = pair.shift.M_plus(pair.T1), pair.shift.M_minus(pair.T1)
    assert mp < 0 and mm < 0
    assert profile(mp) <= sc.f.theta / 2 + 1e-12
    assert mp <= z_star - profile.marginal.radius + 1e-9
    with pytest.raises(OutOfValidity):
        pair.w_plus(pair.T1 + 1.0, 0.0)


def test_constants_positive(setup):
    consts = setup[7]
    assert consts.rho > 0 and consts.k > 0
    assert consts.k == pytest.approx(consts.safety * max(consts.k_terms))


def test_pair_ordering_and_gap(setup):
    pair = setup[6]
    x = np.linspace(-30, 30, 2001)
    for t in times_for(pair):
        lo, hi = pair.w_minus(t, x), pair.w_plus(t, x)
        assert np.all(lo >= 0) and np.all(lo <= hi + 1e-15) and np.all(hi <= 1 + 1e-6)
        assert np.all(lo[np.abs(x) < 15] < hi[np.abs(x) < 15])
        assert np.max(hi - lo) <= pair.gap_bound(t)
    assert np.array_equal(ss.eval_w_plus(pair, pair.T1, np.column_stack([x, 0 * x])), pair.w_plus(pair.T1, x))


def test_planar_wave_residual_small(setup):
    # phi(x1 + ct) solves the lattice problem up to the wave residual
    sc, _, profile = setup[:3]
    g = build_grid(Domain((-10, 10, -2, 2), Obstacle(()), sc.domain.h))
    op = assemble(g, sc.kernel, Metric.euclidean(), padding="reflect")
    P = ss.residual(op, sc.f, lambda s: profile(g.x1 + profile.c * s), 0.0)
    inner = np.abs(g.x1) < 8
    assert np.abs(P[inner]).max() < 5 * profile.residual + 1e-3


def test_certified_at_constructed_k(setup):
    sc, op, _, _, _, _, pair, _ = setup
    times = times_for(pair)
    traj = run(op, sc.f, pair.w_minus(times[0], op.grid.x1), times[0], times[-1], times, sc.scheme)
    rep = ss.certify_sandwich(op, sc.f, pair, times, tol=1e-8, u_states=traj.states)
    assert rep.certified, rep.to_dict()


def test_fails_when_k_too_small(setup):
    sc, op, profile, roots, tails, z_star, _, consts = setup
    pair, _ = ss.build_pair(profile, sc.f, roots, tails, z_star, k=consts.k / 16)
    rep = ss.certify_sandwich(op, sc.f, pair, times_for(pair), tol=1e-6)
    assert not rep.certified
    assert min(rep.min_P_plus) < -1e-6


def test_placement():
    g = build_grid(Domain((-6, 6, -3, 3), disk_obstacle((0.0, 0.0), 1.0), 0.5))
    with pytest.raises(PlacementViolation):
        ss.check_placement(g, 1.0)
    g = build_grid(Domain((-6, 6, -3, 3), disk_obstacle((-3.0, 0.0), 1.0), 0.5))
    ss.check_placement(g, 1.0)


def test_perturbed_super(setup):
    sc, _, profile = setup[:3]
    g = build_grid(Domain((-12, 12, -1, 1), Obstacle(()), sc.domain.h))
    op = assemble(g, sc.kernel, Metric.euclidean(), padding="extend_planar", profile=profile, c=profile.c)
    ps = ss.perturbed_super(profile, sc.f)
    assert ps.kappa == pytest.approx(ps.kappa0)
    u0 = np.clip(0.5 + g.x1 / 4, 0, 1)
    ps = ss.fit_rho(ps, g.x1, u0)
    assert np.all(ps(0.0, g.x1) >= u0 - 1e-12)
    with pytest.raises(ValueError):
        ss.perturbed_super(profile, sc.f, alpha=10.0)
    # P[w] >= 0 away from the box edges, where the ghost values carry the bare wave
    inner = np.abs(g.x1) < 8
    for t in (0.5, 2.0, 5.0):
        P = ss.residual(op, sc.f, lambda s: ps(s, g.x1), t)
        assert P[inner].min() >= -1e-3


def test_perturbed_super_dominates_solution(setup):
    sc, _, profile = setup[:3]
    g = build_grid(Domain((-12, 12, -1, 1), Obstacle(()), sc.domain.h))
    op = assemble(g, sc.kernel, Metric.euclidean(), padding="extend_planar", profile=profile, c=profile.c)
    u0 = np.clip(0.5 + g.x1 / 4, 0, 1)
    ps = ss.fit_rho(ss.perturbed_super(profile, sc.f), g.x1, u0)
    times = [0.0, 5.0, 10.0, 20.0, 40.0]
    traj = run(op, sc.f, u0, 0.0, times[-1], times, SchemeConfig("explicit", dt=0.05))
    for t, u in zip(traj.times, traj.states):
        assert np.all(u <= ps(t, g.x1) + 1e-9)
