import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonloc_front import kernel as kn
from nonloc_front.errors import DisconnectedDomain, EmptyDomain, InvalidGeometry, PointInsideObstacle
from nonloc_front.geometry import (UNREACHABLE, Disk, Domain, Metric, Obstacle, Polygon, annulus_channel,
                                   build_grid, check_j_covering, disk_obstacle, distance, geodesic_dijkstra,
                                   geodesic_distance, obstacle_from_dict, square_annulus_channel, visible)

EXACT = 2 * np.sqrt(3) + np.pi / 3  # tangent segments plus arc around the unit disk


@pytest.fixture(scope="module")
def unit_disk():
    return Obstacle((Disk((0.0, 0.0), 1.0),), step=0.02)


def test_grid_no_obstacle():
    g = build_grid(Domain((-2, 2, -2, 2), Obstacle(()), 1.0))
    assert g.n == 16
    assert g.n * g.area == 16.0


def test_grid_disk_matches_brute_force():
    g = build_grid(Domain((-2, 2, -2, 2), disk_obstacle((0, 0), 1.0), 0.5))
    c = np.arange(-1.75, 2.0, 0.5)
    expected = sum(1 for x, y in itertools.product(c, c) if np.hypot(x, y) >= 1.0)
    assert g.n == expected


def test_closed_ring_is_disconnected():
    with pytest.raises(DisconnectedDomain):
        build_grid(Domain((-7, 7, -7, 7), annulus_channel(2.0, 5.0, channel_width=0.0), 0.25))


def test_channel_connects():
    g = build_grid(Domain((-7, 7, -7, 7), annulus_channel(2.0, 5.0, channel_width=0.6), 0.25))
    assert g.components == 1


def test_empty_domain():
    with pytest.raises(EmptyDomain):
        build_grid(Domain((-1, 1, -1, 1), disk_obstacle((0, 0), 5.0), 0.5))


def test_polygon_orientation_and_convexity():
    cw = Polygon(((0, 0), (0, 1), (1, 1), (1, 0)))
    assert cw.contains(np.array([[0.5, 0.5]]))[0]
    with pytest.raises(InvalidGeometry):
        Polygon(((0, 0), (2, 0), (1, 0.2), (2, 2), (0, 2)))
    with pytest.raises(InvalidGeometry):
        Polygon(((0, 0), (1, 0)))


def test_neighbors_match_brute_force():
    g = build_grid(Domain((-2, 2, -2, 2), disk_obstacle((0.3, 0), 0.7), 0.25))
    for i in (0, 17, g.n // 2, g.n - 1):
        d = np.hypot(*(g.centers - g.centers[i]).T)
        assert np.array_equal(g.neighbors(i, 1.0), np.nonzero(d <= 1.0)[0])


@pytest.mark.parametrize("p,q,expected", [((0, 2), (1, 2), True), ((-2, 0), (2, 0), False)])
def test_visible_simple(unit_disk, p, q, expected):
    assert visible(p, q, unit_disk) is expected


def test_visible_near_tangent_matches_dense_sampling(unit_disk):
    p, q = np.array([-2.0, 0.0]), np.array([0.0, 1.0000001])
    n = int(np.ceil(np.hypot(*(q - p)) / 1e-4))
    s = np.linspace(0, 1, n + 1)[1:-1]
    pts = p + s[:, None] * (q - p)
    oracle = not bool(np.any(np.hypot(pts[:, 0], pts[:, 1]) < 1.0))
    assert visible(p, q, unit_disk) == oracle


def test_geodesic_visible_pair(unit_disk):
    assert geodesic_distance((0, 2), (1, 2), unit_disk) == 1.0


def test_geodesic_antipodal(unit_disk):
    d = geodesic_distance((-2, 0), (2, 0), unit_disk)
    assert d == pytest.approx(EXACT, rel=1e-4)
    assert d >= EXACT - 1e-12  # circumscribed vertices never cut the corner


def test_geodesic_dual_route(unit_disk):
    rng = np.random.default_rng(7)
    for _ in range(20):
        p, q = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
        if np.hypot(*p) < 1 or np.hypot(*q) < 1:
            continue
        assert geodesic_distance(p, q, unit_disk) == pytest.approx(geodesic_dijkstra(p, q, unit_disk), abs=1e-12)


def test_geodesic_closed_ring_unreachable():
    ring = annulus_channel(2.0, 5.0, channel_width=0.0)
    assert geodesic_distance((0, 0), (6, 0), ring) == UNREACHABLE
    assert geodesic_distance((0, 0), (6, 0), ring) == float("inf")


def test_geodesic_rejects_interior_point(unit_disk):
    with pytest.raises(PointInsideObstacle):
        geodesic_distance((0, 0), (3, 0), unit_disk)


def test_geodesic_through_channel():
    obs = square_annulus_channel(2.0, 3.0, 0.6, side="right")
    d = geodesic_distance((0, 0), (4, 0), obs)
    assert d == pytest.approx(4.0)
    d2 = geodesic_distance((0, 1.5), (4, 1.5), obs)
    assert d2 > 4.0


def test_mix_distances(unit_disk):
    p, q = (-2, 0), (2, 0)
    g = geodesic_distance(p, q, unit_disk)
    assert distance(Metric.mix(0.0), p, q, unit_disk) == 4.0
    assert distance(Metric.mix(1.0), p, q, unit_disk) == pytest.approx(EXACT, rel=1e-4)
    assert distance(Metric.mix(0.5), p, q, unit_disk) == pytest.approx((4 + g) / 2, abs=1e-12)
    assert distance(Metric.mix(0.5), p, q, unit_disk) == pytest.approx(4.25566, abs=1e-4)


def test_shrinking_obstacle_shortens_paths():
    big = Obstacle((Disk((0, 0), 1.0),), 0.02)
    small = Obstacle((Disk((0, 0), 0.5),), 0.02)
    rng = np.random.default_rng(3)
    for _ in range(50):
        p, q = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
        if np.hypot(*p) < 1 or np.hypot(*q) < 1:
            continue
        assert geodesic_distance(p, q, small) <= geodesic_distance(p, q, big) + 1e-12


def test_polygonisation_converges():
    errs = []
    for step in (0.08, 0.04, 0.02):
        obs = Obstacle((Disk((0, 0), 1.0),), step)
        errs.append(geodesic_distance((-2, 0), (2, 0), obs) - EXACT)
    assert errs[-1] / EXACT < 0.01
    # at least first order per halving
    assert errs[1] <= 0.5 * errs[0] * 1.05
    assert errs[2] <= 0.5 * errs[1] * 1.05


def test_quasi_euclidean_sandwich_random_pairs():
    obs = Obstacle((Disk((0.0, 0.0), 1.0), Polygon(((1.5, -2), (2.5, -2), (2.5, -0.5), (1.5, -0.5)))), 0.05)
    rng = np.random.default_rng(11)
    pts = rng.uniform(-3.5, 3.5, size=(2 * 10_000, 2))
    pts = pts[~obs.contains(pts, strict=True)][: 2 * 5000]
    P, Q = pts[0::2], pts[1::2]
    vis = ~obs.blocks(P, Q)
    e = np.hypot(*(P - Q).T)
    for p, q, ee, v in zip(P, Q, e, vis):
        d = geodesic_distance(p, q, obs)
        assert d >= ee - 1e-12
        if v:
            assert d == ee


def test_obstacle_from_dict_parts():
    spec = {"parts": [{"disk": {"center": [0, 0], "radius": 4}},
                      {"polygon": {"vertices": [[5, 0], [6, 0], [6, 1]]}}]}
    obs = obstacle_from_dict(spec)
    assert obs.contains(np.array([[0.0, 0.0], [5.9, 0.5]]), strict=True).all()
    with pytest.raises(InvalidGeometry):
        obstacle_from_dict({"builtin": "nope"})


def test_covering_euclidean_connected(gauss):
    g = build_grid(Domain((-4, 4, -4, 4), annulus_channel(1.0, 2.5, channel_width=0.6), 0.25))
    assert check_j_covering(g, gauss, Metric.euclidean()).covered_fraction == 1.0


def test_covering_convex_geodesic(gauss):
    g = build_grid(Domain((-6, 6, -6, 6), disk_obstacle((0, 0), 2.0), 0.25))
    assert check_j_covering(g, gauss, Metric.geodesic()).covered_fraction == 1.0


def test_covering_disconnected_pocket(gauss):
    dom = Domain((-7, 7, -7, 7), annulus_channel(2.0, 5.0, channel_width=0.0), 0.25)
    g = build_grid(dom, require_connected=False)
    assert g.components == 2
    rep = check_j_covering(g, gauss, Metric.geodesic())
    assert 0.0 < rep.covered_fraction < 1.0


def test_covering_round_cap_reported(gauss):
    g = build_grid(Domain((-4, 4, -4, 4), Obstacle(()), 0.25))
    rep = check_j_covering(g, gauss, Metric.euclidean(), max_rounds=2)
    assert rep.rounds_used == 2 and rep.covered_fraction < 1.0


_coord = st.floats(-3.0, 3.0, allow_nan=False)


@settings(max_examples=150, deadline=None)
@given(a=st.tuples(_coord, _coord), b=st.tuples(_coord, _coord), c=st.tuples(_coord, _coord))
def test_geodesic_metric_axioms(a, b, c):
    obs = _AXIOM_OBS
    if obs.contains(np.array([a, b, c]), strict=True).any():
        return
    dab, dba = geodesic_distance(a, b, obs), geodesic_distance(b, a, obs)
    assert dab == pytest.approx(dba, abs=1e-12)
    assert dab >= 0 and geodesic_distance(a, a, obs) == 0.0
    assert dab <= geodesic_distance(a, c, obs) + geodesic_distance(c, b, obs) + 1e-9


_AXIOM_OBS = Obstacle((Disk((0.0, 0.5), 1.0), Polygon(((-2.5, -2), (-1.5, -2), (-1.5, -1), (-2.5, -1)))), 0.1)
