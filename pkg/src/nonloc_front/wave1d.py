"""Planar travelling waves ``c phi' = J1 * phi - phi + f(phi)`` and their tails.

The profile is found by relaxing the 1D Cauchy problem from a ramp and
recentring the theta-level at z = 0 by whole grid cells, so that the
speed appears as the measured drift of the front.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import DegenerateProfile, NoConvergence, NotFound, PoorFit, RootBracketFailure
from .kernel import MarginalKernel
from .nonlinearity import Bistable


@dataclass(frozen=True)
class WaveConfig:
    z_max: float | None = None  # default 20 * radius
    dt: float = 0.05
    t_relax: float = 600.0
    tol: float = 1e-6
    check_every: float = 10.0
    t_min: float = 100.0
    x0: float = 0.0  # centre of the initial smoothed step
    ramp_width: float | None = None  # logistic width, default = kernel radius / 2


@dataclass
class WaveProfile:
    z: np.ndarray
    phi: np.ndarray
    c: float
    theta: float
    marginal: MarginalKernel = field(repr=False)
    residual: float = float("nan")
    t_relaxed: float = float("nan")
    _interp: PchipInterpolator | None = field(default=None, repr=False)

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    @property
    def z_max(self) -> float:
        return float(self.z[-1])

    def _tail_rates(self):
        # local exponential rates at both ends, used to extrapolate
        k = max(int(self.marginal.radius / self.dz), 2)
        lo = np.log(self.phi[k]) - np.log(self.phi[0])
        one_m = 1.0 - self.phi
        hi_idx = np.nonzero(one_m > 1e-12)[0]
        j = hi_idx[-1] if len(hi_idx) else len(self.phi) - 1
        jj = max(j - k, 0)
        hi = (np.log(max(one_m[jj], 1e-300)) - np.log(max(one_m[j], 1e-300)))
        return lo / (self.z[k] - self.z[0]), hi / max(self.z[j] - self.z[jj], self.dz), j

    def __call__(self, x):
        """Profile value at arbitrary points with exponential tails outside the grid."""
        if self._interp is None:
            self._interp = PchipInterpolator(self.z, self.phi, extrapolate=False)
        x = np.asarray(x, dtype=float)
        out = self._interp(np.clip(x, self.z[0], self.z[-1]))
        lam, mu, _ = self._tail_rates()
        left = x < self.z[0]
        right = x > self.z[-1]
        if np.any(left):
            out = np.where(left, self.phi[0] * np.exp(lam * (x - self.z[0])), out)
        if np.any(right):
            out = np.where(right, 1.0 - (1.0 - self.phi[-1]) * np.exp(-mu * (x - self.z[-1])), out)
        return out if out.ndim else float(out)

    def derivative(self, x):
        if self._interp is None:
            self(0.0)
        x = np.asarray(x, dtype=float)
        out = self._interp.derivative()(np.clip(x, self.z[0], self.z[-1]))
        lam, mu, _ = self._tail_rates()
        out = np.where(x < self.z[0], lam * self(x), out)
        out = np.where(x > self.z[-1], mu * (1.0 - self(x)), out)
        return out if out.ndim else float(out)

    def inverse(self, level: float) -> float:
        """z such that phi(z) = level (monotone profile)."""
        i = int(np.searchsorted(self.phi, level))
        if i <= 0 or i >= len(self.phi):
            raise ValueError(f"level {level} outside the resolved profile")
        return float(brentq(lambda s: self(s) - level, self.z[i - 1], self.z[i]))


def _left_rate(v, dz, k):
    # local exponential growth rate of the left tail (0 if unresolved)
    if v[0] <= 0.0 or v[k] <= v[0]:
        return 0.0
    return float(np.log(v[k] / v[0]) / (k * dz))


def _left_ghost(v, dz, n, k):
    rate = _left_rate(v, dz, k)
    if rate == 0.0:
        return np.zeros(n)
    return v[0] * np.exp(-rate * dz * np.arange(n, 0, -1))


def _convolve(v, w, left=None, right=1.0):
    """Discrete convolution with ghost values; ``left=None`` means 0."""
    K = (len(w) - 1) // 2
    lpad = np.zeros(K) if left is None else left
    padded = np.concatenate([lpad, v, np.full(K, right)])
    return np.convolve(padded, w, mode="valid")


def wave_residual(z, phi, c, J1: MarginalKernel, f: Bistable) -> np.ndarray:
    """``c phi' - (J1 * phi - mass phi) - f(phi)`` with centred differences (interior points)."""
    dz = z[1] - z[0]
    conv = _convolve(phi, J1.weights) - J1.mass * phi
    dphi = (phi[2:] - phi[:-2]) / (2.0 * dz)
    return c * dphi - conv[1:-1] - f.eval(phi[1:-1])


def _crossing(v, level, dz, z0):
    i = int(np.searchsorted(v, level))  # first v[i] >= level
    i = min(max(i, 1), len(v) - 1)
    a, b = v[i - 1], v[i]
    frac = (level - a) / (b - a) if b != a else 0.5
    return z0 + (i - 1 + frac) * dz


def solve_profile(J1: MarginalKernel, f: Bistable, config: WaveConfig = WaveConfig()) -> WaveProfile:
    """Relax to the travelling wave and measure its speed.

    The grid spacing is the marginal's ``step``; build the marginal at the
    resolution you want (``kernel.marginal(k, step=dz)``).
    """
    dz = J1.step
    R = J1.radius
    z_max = config.z_max if config.z_max is not None else 20.0 * R
    Kz = int(round(z_max / dz))
    z = np.arange(-Kz, Kz + 1) * dz
    w = J1.weights
    mass = J1.mass
    theta = f.theta
    width = config.ramp_width if config.ramp_width is not None else R / 2
    if width > 0:
        v = 0.5 * (1.0 + np.tanh((z - config.x0) / width))
    else:
        v = (z >= config.x0).astype(float)
    K = (len(w) - 1) // 2
    kk = max(K // 2, 1)

    dt = config.dt
    n_steps = int(round(config.t_relax / dt))
    check = max(int(round(config.check_every / dt)), 1)
    offset = 0.0
    times = np.empty(n_steps + 1)
    pos = np.empty(n_steps + 1)
    times[0], pos[0] = 0.0, _crossing(v, theta, dz, z[0])
    c_prev = None
    converged = False
    step = 0
    for step in range(1, n_steps + 1):
        # the left tail is continued exponentially so it stays resolved
        v = v + dt * (_convolve(v, w, _left_ghost(v, dz, K, kk)) - mass * v + f.eval(v))
        p = _crossing(v, theta, dz, z[0])
        m = int(np.round(p / dz))
        if m > 0:
            v = np.concatenate([v[m:], np.ones(m)])
        elif m < 0:
            v = np.concatenate([_left_ghost(v, dz, -m, kk), v[:m]])
        offset += m * dz
        times[step] = step * dt
        pos[step] = offset + p
        if step % check == 0 and times[step] >= config.t_min:
            half = step // 2
            c_est = -np.polyfit(times[half:step + 1], pos[half:step + 1], 1)[0]
            if c_prev is not None and abs(c_est - c_prev) <= config.tol:
                converged = True
                break
            c_prev = c_est
    if not converged:
        raise NoConvergence(f"speed estimate did not settle to {config.tol} within t = {config.t_relax}")
    half = step // 2
    c = float(-np.polyfit(times[half:step + 1], pos[half:step + 1], 1)[0])

    if np.any(np.diff(v) < -1e-9):
        raise DegenerateProfile("relaxed profile is not monotone")
    interp = PchipInterpolator(z, v)
    p = _crossing(v, theta, dz, z[0])
    # refine on the interpolant itself so that phi(0) = theta exactly
    p = float(brentq(lambda s: interp(s) - theta, p - dz, p + dz, xtol=1e-14))
    phi = interp(np.clip(z + p, z[0], z[-1]))
    phi = np.clip(phi, 0.0, 1.0)
    if p > 0:
        n_fill = int(np.ceil(p / dz))
        phi[len(phi) - n_fill:] = np.maximum(phi[len(phi) - n_fill:], v[-1])
    if phi[0] > 1e-4 or 1.0 - phi[-1] > 1e-4:
        raise DegenerateProfile("profile does not reach the stable states within z_max; enlarge z_max")
    res = wave_residual(z, phi, c, J1, f)
    return WaveProfile(z, phi, c, theta, J1, float(np.abs(res).max()), float(times[step]))


# ---------------------------------------------------------------------------
# characteristic roots and tails
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CharacteristicRoots:
    lam: float
    mu: float
    residual_lam: float
    residual_mu: float
    c: float


def characteristic_function(J1: MarginalKernel, c: float, slope: float, side: str = "left"):
    """``m(s) = int J1(h) e^{sh} dh - mass -+ c s + slope`` and its derivative.

    ``side="left"`` gives the rate of ``phi ~ e^{s z}`` as z -> -inf (sign -),
    ``side="right"`` the rate of ``1 - phi ~ e^{-s z}`` as z -> +inf (sign +).
    """
    mass = 1.0 if J1.kernel is not None else J1.mass
    sc = -c if side == "left" else c

    def m(s):
        return J1.mgf(s) - mass + sc * s + slope

    def dm(s):
        return J1.dmgf(s) + sc

    return m, dm


def _positive_root(J1, c, slope, side):
    m, dm = characteristic_function(J1, c, slope, side)
    if m(0.0) >= 0:
        raise RootBracketFailure(f"m(0) = {m(0.0)} is not negative")
    s_hi = 1.0 / J1.radius
    limit = 50.0 / J1.radius
    while m(s_hi) <= 0.0:
        s_hi *= 2.0
        if s_hi > limit:
            raise RootBracketFailure(f"no sign change of m below s = {limit}")
    s = brentq(m, 0.0, s_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(5):
        val = m(s)
        if abs(val) <= 1e-13:
            break
        s -= val / dm(s)
    return float(s), float(m(s))


def characteristic_roots(J1: MarginalKernel, c: float, f: Bistable) -> CharacteristicRoots:
    lam, rl = _positive_root(J1, c, f.fprime0, "left")
    mu, rm = _positive_root(J1, c, f.fprime1, "right")
    return CharacteristicRoots(lam, mu, rl, rm, float(c))


@dataclass(frozen=True)
class TailConstants:
    A0: float
    A1: float
    fit_error: float
    fit_error_right: float
    slope_left: float
    slope_right: float
    alpha0: float
    beta0: float
    gamma0: float
    delta0: float
    alpha1: float
    beta1: float
    gamma1: float
    delta1: float
    window_left: tuple[float, float]
    window_right: tuple[float, float]


def _centred_derivative(z, phi):
    d = np.gradient(phi, z[1] - z[0])
    return d


def tail_constants(profile: WaveProfile, roots: CharacteristicRoots, floor: float = 1e-10,
                   right_level: float = 1e-3, max_error: float = 0.1) -> TailConstants:
    """Fit ``phi ~ A0 e^{lam z}`` at the left and ``1 - phi ~ A1 e^{-mu z}`` at the right.

    The left window is ``[-z_max + R, -z_max / 2]``. On the right, ``1 - phi``
    loses relative precision near 1, so the window is the set where
    ``floor <= 1 - phi <= right_level``.
    """
    z, phi = profile.z, profile.phi
    R = profile.marginal.radius
    lam, mu = roots.lam, roots.mu
    dphi = _centred_derivative(z, phi)

    lw = (z >= -profile.z_max + R) & (z <= -profile.z_max / 2)
    scaled = phi[lw] * np.exp(-lam * z[lw])
    A0 = float(np.exp(np.mean(np.log(scaled))))
    err_l = float(np.max(np.abs(scaled / A0 - 1.0)))
    slope_l = float(np.polyfit(z[lw], np.log(phi[lw]), 1)[0])

    one_m = 1.0 - phi
    rw = (z >= 0) & (one_m >= floor) & (one_m <= right_level)
    if rw.sum() < 5:
        raise PoorFit("right tail window holds fewer than 5 points")
    scaled_r = one_m[rw] * np.exp(mu * z[rw])
    A1 = float(np.exp(np.mean(np.log(scaled_r))))
    err_r = float(np.max(np.abs(scaled_r / A1 - 1.0)))
    slope_r = float(-np.polyfit(z[rw], np.log(one_m[rw]), 1)[0])

    # bounds on z <= 0 (resolved part) and on z > 0 down to the precision floor
    neg = (z >= -profile.z_max + R) & (z <= 0)
    e_neg = np.exp(-lam * z[neg])
    pos = (z > 0) & (one_m >= floor)
    e_pos = np.exp(mu * z[pos])
    consts = dict(
        alpha0=float(np.min(phi[neg] * e_neg)), beta0=float(np.max(phi[neg] * e_neg)),
        gamma0=float(np.min(dphi[neg] * e_neg)), delta0=float(np.max(dphi[neg] * e_neg)),
        alpha1=float(np.min(one_m[pos] * e_pos)), beta1=float(np.max(one_m[pos] * e_pos)),
        gamma1=float(np.min(dphi[pos] * e_pos)), delta1=float(np.max(dphi[pos] * e_pos)),
    )
    fit_error = max(err_l, err_r)
    if fit_error > max_error:
        raise PoorFit(f"tail fit relative deviation {fit_error:.3g} exceeds {max_error}")
    return TailConstants(A0, A1, fit_error, err_r, slope_l, slope_r,
                         window_left=(float(z[lw][0]), float(z[lw][-1])),
                         window_right=(float(z[rw][0]), float(z[rw][-1])), **consts)


def convexity_threshold(profile: WaveProfile, roots: CharacteristicRoots) -> float:
    """Largest grid point z* < 0 with ``phi'' >= (lam / 8) phi'`` on the whole resolved half-line below it."""
    z, phi = profile.z, profile.phi
    dz = profile.dz
    R = profile.marginal.radius
    d1 = (phi[2:] - phi[:-2]) / (2 * dz)
    d2 = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / dz ** 2
    zc = z[1:-1]
    win = zc >= -profile.z_max + R
    ok = d2[win] >= roots.lam / 8.0 * d1[win]
    zw = zc[win]
    if not ok[0]:
        raise NotFound("convexity inequality fails at the left end of the resolved window; enlarge z_max")
    bad = np.nonzero(~ok)[0]
    last = zw[-1] if len(bad) == 0 else zw[bad[0] - 1]
    return float(min(last, zw[zw < 0][-1]))
