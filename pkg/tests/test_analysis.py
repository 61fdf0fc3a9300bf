import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonloc_front import analysis as an
from nonloc_front.errors import InsufficientData, NotConverged
from nonloc_front.geometry import Domain, Metric, Obstacle, build_grid, disk_obstacle
from nonloc_front.operator import assemble
from nonloc_front.solver import SchemeConfig


@pytest.fixture(scope="module")
def grid():
    return build_grid(Domain((-10, 10, -2, 2), Obstacle(()), 0.25))


def ramp(grid, front):
    """Piecewise linear front of width 2 centred at ``front`` (per row)."""
    return np.clip(0.5 + (grid.x1 - front) / 2, 0, 1)


@pytest.mark.parametrize("level", [0.1, 0.5, 0.9])
def test_level_positions_linear_field(grid, level):
    rays, pos = an.level_positions(grid, ramp(grid, 1.3), level)
    assert len(rays) == 16
    assert np.allclose(pos, 1.3 + 2 * (level - 0.5), atol=1e-12)


def test_level_positions_edges(grid):
    _, pos = an.level_positions(grid, np.ones(grid.n), 0.5)
    assert np.all(pos == -10.0)
    _, pos = an.level_positions(grid, np.zeros(grid.n), 0.5)
    assert np.all(np.isnan(pos))
    with pytest.raises(ValueError):
        an.level_positions(grid, np.zeros(grid.n), 1.0)
    rays, _ = an.level_positions(grid, np.zeros(grid.n), 0.5, rays=[0.1])
    assert rays == pytest.approx([0.125])


def test_level_positions_skip_obstacle():
    g = build_grid(Domain((-4, 4, -2, 2), disk_obstacle((0, 0), 1.0), 0.25))
    u = np.clip(0.5 + g.x1 / 2, 0, 1)
    _, pos = an.level_positions(g, u, 0.5, rays=[0.125])
    # the ray through the disk jumps across it; the crossing is interpolated across the gap
    assert -1.2 < pos[0] < 1.2


def test_mean_speed_exact_synthetic(grid):
    times = np.arange(0, 50, 5.0)
    states = [ramp(grid, 6.0 - 0.1 * t) for t in times]
    track = an.track_front(grid, times, states, 0.5)
    est = an.mean_speed(track)
    assert est.c_est == pytest.approx(0.1, abs=1e-12)
    assert est.r2 == pytest.approx(1.0)
    assert est.intercept == pytest.approx(6.0)
    with pytest.raises(InsufficientData):
        an.mean_speed(track, t_min=30)


def test_front_track_rows(grid):
    track = an.track_front(grid, [0.0, 1.0], [ramp(grid, 0.0)] * 2, 0.5)
    rows = list(track.rows())
    assert len(rows) == 32
    assert rows[0][2] == 0.5 and track.as_array().shape == (2, 16)


def test_level_frames_translating_field(grid):
    c = 0.2
    times = np.arange(0, 40, 2.0)
    states = [ramp(grid, 8.0 - c * t) for t in times]
    half = len(times) // 2
    for lv in (0.1, 0.5, 0.9):
        frames = an.fit_level_frames(grid, times[:half], states[:half], lv, c, gamma1=10.0)
        v = an.level_frame_violations(grid, times[half:], states[half:], frames, c)
        assert v == {"upper": 0, "lower": 0, "total": 0}
    # a front that outruns the frames is caught
    fast = [ramp(grid, 8.0 - 2 * c * t) for t in times]
    v = an.level_frame_violations(grid, times[half:], fast[half:], frames, c)
    assert v["upper"] > 0


def test_classify_liouville():
    u = np.ones(10)
    pocket = np.zeros(10, dtype=bool)
    pocket[:3] = True
    assert an.classify_liouville(u, None, pocket).classification == "Invasion"
    u[:3] = 0.2
    assert an.classify_liouville(u, None, pocket).classification == "Blocking"
    u[:3] = 0.7
    assert an.classify_liouville(u, None, pocket).classification == "Indeterminate"
    rep = an.classify_liouville(u, np.arange(10) >= 3, None)
    assert rep.classification == "Invasion" and rep.min_pocket is None
    assert set(rep.to_dict()) == {"classification", "min_probe", "min_pocket", "probe", "residual"}


def test_transition_diag_stationary_input(grid):
    u = ramp(grid, 0.0)
    d = an.transition_front_diag(grid, [0.0, 5.0], [u, u], u, 0.1, [3, 0, 1])
    assert d["A"] == [0, 1, 3]
    assert d["front_gap"] == [0.0, 0.0, 0.0]
    assert np.all(np.diff(d["rear_sup"]) <= 0)


@settings(max_examples=30, deadline=None)
@given(shift=st.floats(-5, 5), c=st.floats(0.01, 0.5))
def test_transition_diag_monotone(grid, shift, c):
    times = [0.0, 10.0, 20.0]
    states = [ramp(grid, shift - c * t) for t in times]
    d = an.transition_front_diag(grid, times, states, np.ones(grid.n), c, [0, 1, 2, 4, 8])
    assert np.all(np.diff(d["front_gap"]) <= 0) and np.all(np.diff(d["rear_sup"]) <= 0)


def test_steady_state_no_obstacle(gauss, cubic):
    g = build_grid(Domain((-4, 4, -2, 2), Obstacle(()), 0.25))
    op = assemble(g, gauss, Metric.euclidean(), padding="reflect")
    res = an.steady_state(op, cubic, np.clip(0.5 + g.x1 / 2, 0, 1), SchemeConfig(dt=0.5), tol=1e-8,
                          t_max=500, probe_radius=2.0)
    assert res.converged and np.allclose(res.u_inf, 1.0, atol=1e-6)
    assert res.residual <= 1e-6 and res.far_field_ok
    with pytest.raises(NotConverged):
        an.steady_state(op, cubic, np.clip(0.5 + g.x1 / 2, 0, 1), SchemeConfig(dt=0.5), tol=1e-12, t_max=2)
    lazy = an.steady_state(op, cubic, np.clip(0.5 + g.x1 / 2, 0, 1), SchemeConfig(dt=0.5), tol=1e-12, t_max=2,
                           raise_on_fail=False)
    assert not lazy.converged and lazy.t_used == pytest.approx(2.0)
