"""Front tracking, speed estimates, steady states and invasion/blocking diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData, NotConverged
from .nonlinearity import Bistable
from .operator import NonlocalOperator
from .solver import CauchyState, SchemeConfig, step


# ---------------------------------------------------------------------------
# level sets along rays
# ---------------------------------------------------------------------------
@dataclass
class FrontTrack:
    level: float
    rays: np.ndarray  # x2 of each ray
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)  # one array per time

    def add(self, t, pos):
        self.times.append(float(t))
        self.positions.append(np.asarray(pos, dtype=float))

    def as_array(self) -> np.ndarray:
        return np.vstack(self.positions) if self.positions else np.zeros((0, len(self.rays)))

    def rows(self):
        """``(t, ray_y, level, x1_position)`` tuples."""
        for t, pos in zip(self.times, self.positions):
            for y, p in zip(self.rays, pos):
                yield t, float(y), self.level, float(p)


def _ray_index(grid):
    """Cell indices of every lattice row (fixed x2), ordered by x1."""
    if grid.dim == 1:
        return np.array([0.0]), [np.argsort(grid.x1, kind="stable")]
    idx = grid.index
    rays, cells = [], []
    for j in range(idx.shape[1]):
        col = idx[:, j]
        col = col[col >= 0]
        if len(col):
            rays.append(grid.centers[col[0], 1])
            cells.append(col)
    return np.array(rays), cells


def level_positions(grid, u, level: float, rays=None) -> tuple[np.ndarray, np.ndarray]:
    """Leftmost ``x1`` on each ray where u reaches ``level``.

    Linear interpolation between the two cells that bracket the level;
    the left box edge if the first cell already reaches it; NaN if the ray
    never does. ``rays`` selects rows by their x2 value (default: all).
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    u = np.asarray(u, dtype=float)
    all_rays, cells = _ray_index(grid)
    if rays is not None:
        want = np.asarray(rays, dtype=float)
        pick = [int(np.argmin(np.abs(all_rays - y))) for y in want]
        all_rays = all_rays[pick]
        cells = [cells[k] for k in pick]
    x1 = grid.x1
    left_edge = grid.domain.box[0]
    out = np.full(len(cells), np.nan)
    for r, c in enumerate(cells):
        v = u[c]
        hit = np.nonzero(v >= level)[0]
        if len(hit) == 0:
            continue
        k = hit[0]
        if k == 0:
            out[r] = left_edge if np.isclose(x1[c[0]], left_edge + 0.5 * grid.h) else x1[c[0]]
            continue
        a, b = v[k - 1], v[k]
        xa, xb = x1[c[k - 1]], x1[c[k]]
        out[r] = xa + (level - a) / (b - a) * (xb - xa)
    return all_rays, out


def track_front(grid, times, states, level: float, rays=None) -> FrontTrack:
    track = None
    for t, u in zip(times, states):
        r, pos = level_positions(grid, u, level, rays)
        if track is None:
            track = FrontTrack(level, r)
        track.add(t, pos)
    return track


@dataclass(frozen=True)
class SpeedEstimate:
    c_est: float
    r2: float
    intercept: float
    n_points: int


def mean_speed(track: FrontTrack, t_min: float | None = None, t_max: float | None = None,
               rays_mask=None, min_snapshots: int = 5) -> SpeedEstimate:
    """Pooled least-squares slope of ``-position`` against t over the selected rays."""
    t = np.asarray(track.times)
    P = track.as_array()
    sel = np.ones(len(t), dtype=bool)
    if t_min is not None:
        sel &= t >= t_min
    if t_max is not None:
        sel &= t <= t_max
    t, P = t[sel], P[sel]
    if rays_mask is not None:
        P = P[:, np.asarray(rays_mask, dtype=bool)]
    tt = np.repeat(t, P.shape[1])
    pp = P.ravel()
    ok = np.isfinite(pp)
    if len(np.unique(tt[ok])) < min_snapshots:
        raise InsufficientData(f"need at least {min_snapshots} snapshots with a resolved front")
    tt, pp = tt[ok], -pp[ok]
    A = np.column_stack([tt, np.ones_like(tt)])
    (slope, icpt), *_ = np.linalg.lstsq(A, pp, rcond=None)
    pred = slope * tt + icpt
    ss_res = float(np.sum((pp - pred) ** 2))
    ss_tot = float(np.sum((pp - pp.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return SpeedEstimate(float(slope), float(r2), float(-icpt), int(len(tt)))


# ---------------------------------------------------------------------------
# super-level set frames
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LevelFrames:
    level: float
    gamma0: float
    gamma1: float
    gamma2: float


def fit_level_frames(grid, times, states, level: float, c: float, gamma1: float,
                     margin: float | None = None) -> LevelFrames:
    """Constants with ``E(t) in {x1 >= G0 - ct}`` and ``E(t) contains {G1 >= x1 >= G2 - ct}``.

    ``E(t) = {u(t) >= level}``. G0 and G2 are the tightest values that hold
    on the given snapshots, relaxed by ``margin`` (default one cell).
    """
    margin = grid.h if margin is None else margin
    x1 = grid.x1
    g0, g2 = np.inf, -np.inf
    for t, u in zip(times, states):
        inside = u >= level
        if inside.any():
            g0 = min(g0, float((x1[inside] + c * t).min()))
        below = (~inside) & (x1 <= gamma1)
        if below.any():
            g2 = max(g2, float((x1[below] + c * t).max()))
    if not np.isfinite(g0):
        raise InsufficientData("level never reached on the fitting snapshots")
    return LevelFrames(level, g0 - margin, gamma1, g2 + margin if np.isfinite(g2) else -np.inf)


def level_frame_violations(grid, times, states, frames: LevelFrames, c: float) -> dict:
    """Cells breaking either inclusion on the given snapshots."""
    x1 = grid.x1
    upper = lower = 0
    for t, u in zip(times, states):
        inside = u >= frames.level
        upper += int(np.sum(inside & (x1 < frames.gamma0 - c * t)))
        band = (x1 <= frames.gamma1) & (x1 >= frames.gamma2 - c * t)
        lower += int(np.sum(band & ~inside))
    return {"upper": upper, "lower": lower, "total": upper + lower}


# ---------------------------------------------------------------------------
# steady states and classification
# ---------------------------------------------------------------------------
@dataclass
class SteadyResult:
    u_inf: np.ndarray
    residual: float
    converged: bool
    t_used: float
    change_rate: float
    far_field_min: float | None = None  # min u_inf on cells with |x| >= probe_radius
    far_field_ok: bool | None = None


def steady_residual(op: NonlocalOperator, f: Bistable, u) -> float:
    return float(np.abs(op.apply(u) + f.eval(u)).max())


def steady_state(op: NonlocalOperator, f: Bistable, u_seed, config: SchemeConfig = SchemeConfig(),
                 tol: float = 1e-6, t_max: float = 1000.0, raise_on_fail: bool = True,
                 probe_radius: float | None = None, far_eps: float = 0.05) -> SteadyResult:
    """Integrate until ``|u(t+1) - u(t)|_inf <= tol`` (per unit time) or ``t_max``.

    With ``probe_radius`` the far-field proxy is checked too: a steady state
    that reaches ``1 - tol`` somewhere should stay above ``1 - far_eps`` on
    every cell with ``|x| >= probe_radius``.
    """
    per_unit = max(int(round(1.0 / config.dt)), 1)
    state = CauchyState(0.0, np.array(u_seed, dtype=float))
    rate = np.inf
    k = 0
    n_max = int(round(t_max / config.dt))
    while k < n_max:
        before = state.u
        for _ in range(per_unit):
            state = step(op, f, state, config)
            k += 1
        rate = float(np.abs(state.u - before).max()) / (per_unit * config.dt)
        if rate <= tol:
            break
    converged = rate <= tol
    if not converged and raise_on_fail:
        raise NotConverged(f"change rate {rate:.3g} above {tol} after t = {k * config.dt}")
    far_min = far_ok = None
    if probe_radius is not None:
        far = np.hypot(*op.grid.centers.T) >= probe_radius if op.grid.dim == 2 else np.abs(op.grid.x1) >= probe_radius
        if far.any():
            far_min = float(state.u[far].min())
            far_ok = bool(state.u.max() < 1 - tol or far_min >= 1 - far_eps)
    return SteadyResult(state.u, steady_residual(op, f, state.u), bool(converged), k * config.dt, rate,
                        far_min, far_ok)


@dataclass
class BlockingReport:
    classification: str  # "Invasion" | "Blocking" | "Indeterminate"
    min_probe: float
    min_pocket: float | None
    probe: str
    residual: float | None = None

    def to_dict(self):
        return {"classification": self.classification, "min_probe": self.min_probe,
                "min_pocket": self.min_pocket, "probe": self.probe, "residual": self.residual}


def classify_liouville(u_inf, probe_mask=None, pocket_mask=None, invasion: float = 0.95,
                       blocking: float = 0.5, probe: str = "window", residual: float | None = None) -> BlockingReport:
    """Invasion if ``min u >= invasion`` on the probe, Blocking if ``min u < blocking`` on the pocket."""
    u = np.asarray(u_inf, dtype=float)
    pm = np.ones(len(u), dtype=bool) if probe_mask is None else np.asarray(probe_mask, dtype=bool)
    min_probe = float(u[pm].min())
    min_pocket = None
    if pocket_mask is not None and np.any(pocket_mask):
        min_pocket = float(u[np.asarray(pocket_mask, dtype=bool)].min())
    if min_pocket is not None and min_pocket < blocking:
        cls = "Blocking"
    elif min_probe >= invasion and (min_pocket is None or min_pocket >= invasion):
        cls = "Invasion"
    else:
        cls = "Indeterminate"
    return BlockingReport(cls, min_probe, min_pocket, probe, residual)


def transition_front_diag(grid, times, states, u_inf, c: float, A_values, shift: float = 0.0):
    """For each A: ``sup |u - u_inf|`` where ``x1 + ct + shift >= A`` and ``sup u`` where it is ``<= -A``.

    ``shift`` moves the time origin of the run to that of the entire
    solution (a front started at ``x1_0`` gets ``shift = -x1_0``). Sups over
    empty sets are 0.
    """
    A_values = np.sort(np.asarray(A_values, dtype=float))
    x1 = grid.x1
    front = np.zeros(len(A_values))
    rear = np.zeros(len(A_values))
    for t, u in zip(times, states):
        s = x1 + c * t + shift
        gap = np.abs(u - u_inf)
        for k, A in enumerate(A_values):
            m = s >= A
            if m.any():
                front[k] = max(front[k], float(gap[m].max()))
            m = s <= -A
            if m.any():
                rear[k] = max(rear[k], float(u[m].max()))
    return {"A": A_values.tolist(), "front_gap": front.tolist(), "rear_sup": rear.tolist()}
