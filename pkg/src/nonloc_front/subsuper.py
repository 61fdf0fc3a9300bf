"""Explicit sub- and supersolutions built from the travelling wave, and their certification.

The pair ``w-`` <= ``w+`` brackets the entire solution that looks like the
planar wave ``phi(x1 + ct)`` at very negative times, as long as the
obstacle sits in ``{x1 < -R_J}``. Certification samples the residual
``P[w] = w_t - Lw - f(w)`` of both functions on the grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from .errors import OutOfValidity, PlacementViolation
from .nonlinearity import Bistable
from .operator import NonlocalOperator
from .wave1d import CharacteristicRoots, TailConstants, WaveProfile


@dataclass(frozen=True)
class FrontShift:
    """``xi(t) = -log(1 - (k/c) e^{lam c t}) / lam`` for ``t < T = log(c/k) / (lam c)``."""

    k: float
    lam: float
    c: float

    @property
    def T(self) -> float:
        return float(np.log(self.c / self.k) / (self.lam * self.c))

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t >= self.T):
            raise OutOfValidity(f"xi is defined only for t < T = {self.T:.6g}")
        out = -np.log1p(-(self.k / self.c) * np.exp(self.lam * self.c * t)) / self.lam
        return out if out.ndim else float(out)

    def xi_dot(self, t):
        """``k e^{lam M+(t)}`` (closed form of the derivative of xi)."""
        return self.k * np.exp(self.lam * self.M_plus(t))

    def M_plus(self, t):
        return self.c * np.asarray(t, dtype=float) + self.xi(t)

    def M_minus(self, t):
        return self.c * np.asarray(t, dtype=float) - self.xi(t)


@dataclass(frozen=True)
class SandwichConstants:
    rho: float
    k: float
    k_terms: tuple[float, float, float, float]
    safety: float


def sandwich_constants(f: Bistable, roots: CharacteristicRoots, tails: TailConstants,
                       safety: float = 2.0) -> SandwichConstants:
    """``k = safety * max(rho b0^2/g0, rho b0/g1, (d0 + rho b0)/g0, 8 rho b0/lam)``.

    ``rho`` bounds ``|f(a) + f(b) - f(a + b)| / (ab)`` and is sampled from f.
    """
    rho = f.pair_defect_constant()
    b0, g0, g1, d0 = tails.beta0, tails.gamma0, tails.gamma1, tails.delta0
    terms = (rho * b0 * b0 / g0, rho * b0 / g1, (d0 + rho * b0) / g0, 8.0 * rho * b0 / roots.lam)
    return SandwichConstants(rho, safety * max(terms), terms, safety)


@dataclass(frozen=True)
class SandwichPair:
    profile: WaveProfile
    shift: FrontShift
    T1: float

    def _check(self, t):
        if t > self.T1 + 1e-12:
            raise OutOfValidity(f"t = {t} exceeds the validity horizon T1 = {self.T1:.6g}")

    def w_plus(self, t: float, x1):
        self._check(t)
        x1 = np.asarray(x1, dtype=float)
        m = self.shift.M_plus(t)
        phi = self.profile
        right = phi(x1 + m) + phi(-x1 + m)
        out = np.where(x1 >= 0, right, 2.0 * phi(m))
        return out if out.ndim else float(out)

    def w_minus(self, t: float, x1):
        self._check(t)
        x1 = np.asarray(x1, dtype=float)
        m = self.shift.M_minus(t)
        phi = self.profile
        out = np.where(x1 >= 0, phi(x1 + m) - phi(-x1 + m), 0.0)
        return out if out.ndim else float(out)

    def gap_bound(self, t: float) -> float:
        """``3 |phi'|_inf xi(t) + 2 phi(M+) + phi(M-)``, an upper bound of ``|w+ - w-|``."""
        dmax = float(np.max(np.gradient(self.profile.phi, self.profile.dz)))
        return 3 * dmax * self.shift.xi(t) + 2 * self.profile(self.shift.M_plus(t)) \
            + self.profile(self.shift.M_minus(t))


def eval_w_plus(pair: SandwichPair, t, x):
    return pair.w_plus(t, np.atleast_2d(x)[:, 0] if np.ndim(x) > 1 else x)


def eval_w_minus(pair: SandwichPair, t, x):
    return pair.w_minus(t, np.atleast_2d(x)[:, 0] if np.ndim(x) > 1 else x)


def choose_T1(profile: WaveProfile, shift: FrontShift, z_star: float, radius: float,
              theta: float) -> float:
    """Largest t < T with ``M-(t), M+(t) < 0``, ``phi(M+) <= theta/2`` and ``M+ <= z* - R``.

    All conditions are monotone in t, so the boundary is found by bisection.
    """
    def ok(t):
        mp = shift.M_plus(t)
        return mp < 0 and shift.M_minus(t) < 0 and profile(mp) <= theta / 2 and mp <= z_star - radius

    hi = shift.T - 1e-9 / (shift.lam * shift.c)
    lo = hi - 1.0
    while not ok(lo):
        lo -= 2 * (hi - lo)
        if hi - lo > 1e6:
            raise OutOfValidity("no admissible T1 found")
    if ok(hi):
        return float(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    return float(lo)


def build_pair(profile: WaveProfile, f: Bistable, roots: CharacteristicRoots, tails: TailConstants,
               z_star: float, safety: float = 2.0, k: float | None = None):
    consts = sandwich_constants(f, roots, tails, safety)
    k = consts.k if k is None else k
    shift = FrontShift(k, roots.lam, profile.c)
    T1 = choose_T1(profile, shift, z_star, profile.marginal.radius, f.theta)
    return SandwichPair(profile, shift, T1), consts


def residual(op: NonlocalOperator, f: Bistable, w, t: float, dt_fd: float = 1e-2) -> np.ndarray:
    """``P[w](t) = (w(t+dt) - w(t-dt)) / 2dt - L w(t) - f(w(t))`` on the grid.

    ``w(t)`` must return the field on the grid's cells.
    """
    now = np.asarray(w(t), dtype=float)
    dwdt = (np.asarray(w(t + dt_fd)) - np.asarray(w(t - dt_fd))) / (2 * dt_fd)
    return dwdt - op.apply(now) - op.source(now, t) - f.eval(now)


def check_placement(grid, radius: float):
    obs = grid.obstacle
    if obs.empty:
        return
    x1max = obs.bounds()[1]
    if not x1max < -radius:
        raise PlacementViolation(f"obstacle reaches x1 = {x1max:.4g}, needs to stay below -R_J = {-radius}")


@dataclass
class SandwichReport:
    times: list
    min_P_plus: list
    max_P_minus: list
    ordering_ok: bool
    max_excess_above_one: float
    tol: float
    u_between: bool | None = None
    max_u_violation: float | None = None

    @property
    def certified(self) -> bool:
        ok = min(self.min_P_plus) >= -self.tol and max(self.max_P_minus) <= self.tol and self.ordering_ok
        return ok and self.u_between is not False

    def to_dict(self) -> dict:
        return {"times": self.times, "min_P_plus": self.min_P_plus, "max_P_minus": self.max_P_minus,
                "ordering_ok": self.ordering_ok, "max_excess_above_one": self.max_excess_above_one,
                "tol": self.tol, "u_between": self.u_between, "max_u_violation": self.max_u_violation,
                "certified": self.certified}


def certify_sandwich(op: NonlocalOperator, f: Bistable, pair: SandwichPair, times, tol: float,
                     u_states=None, dt_fd: float = 1e-2, one_tol: float = 1e-6,
                     order_tol: float = 1e-9) -> SandwichReport:
    """Sample ``P[w+] >= -tol``, ``P[w-] <= tol``, ``0 <= w- < w+ <= 1`` (+ ``one_tol``)
    and, if ``u_states`` are given (fields at ``times``), ``w- <= u <= w+``.

    Where ``lam < mu`` the far tail of ``phi(-x1 + M+)`` outlives ``1 - phi(x1 + M+)``,
    so ``w+`` may exceed 1 by a tiny amount; ``one_tol`` bounds that excess.
    """
    grid = op.grid
    R = op.kernel.radius
    check_placement(grid, R)
    x1 = grid.x1
    wp = lambda s: pair.w_plus(s, x1)  # noqa: E731
    wm = lambda s: pair.w_minus(s, x1)  # noqa: E731
    mins, maxs = [], []
    ordering_ok = True
    excess = 0.0
    u_ok, u_viol = (None, None) if u_states is None else (True, 0.0)
    for n, t in enumerate(times):
        pair._check(t)
        # the centred difference may step past T1 but must stay below T
        h_fd = min(dt_fd, 0.5 * (pair.shift.T - t))
        P_plus = _residual_unchecked(op, f, pair, "plus", t, h_fd, x1)
        P_minus = _residual_unchecked(op, f, pair, "minus", t, h_fd, x1)
        mins.append(float(P_plus.min()))
        maxs.append(float(P_minus.max()))
        a, b = wm(t), wp(t)
        ordering_ok &= bool(np.all(a >= 0) and np.all(a < b) and np.all(b <= 1 + one_tol))
        excess = max(excess, float(b.max() - 1.0))
        if u_states is not None:
            u = u_states[n]
            v = max(float((a - u).max()), float((u - b).max()))
            u_viol = max(u_viol, v)
            u_ok &= v <= order_tol
    return SandwichReport(list(map(float, times)), mins, maxs, bool(ordering_ok), max(excess, 0.0), tol,
                          u_ok, u_viol)


def _residual_unchecked(op, f, pair, which, t, dt_fd, x1):
    # evaluates w at t + dt_fd even when that lies just past T1 (still below T)
    shift, phi = pair.shift, pair.profile

    def w(s):
        if which == "plus":
            m = shift.M_plus(s)
            return np.where(x1 >= 0, phi(x1 + m) + phi(-x1 + m), 2.0 * phi(m))
        m = shift.M_minus(s)
        return np.where(x1 >= 0, phi(x1 + m) - phi(-x1 + m), 0.0)

    return residual(op, f, w, t, dt_fd)


# ---------------------------------------------------------------------------
# perturbed supersolution for large times
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PerturbedSuper:
    """``phi(x1 + ct + rho + kappa beta (1 - e^{-alpha t})) + beta e^{-alpha t}``."""

    profile: WaveProfile
    alpha: float
    beta: float
    kappa: float
    rho: float
    alpha0: float
    beta0: float
    kappa0: float
    A: float
    zeta: float

    def __call__(self, t, x1):
        e = np.exp(-self.alpha * t)
        z = np.asarray(x1) + self.profile.c * t + self.rho + self.kappa * self.beta * (1.0 - e)
        return self.profile(z) + self.beta * e

    def with_rho(self, rho: float) -> "PerturbedSuper":
        return PerturbedSuper(self.profile, self.alpha, self.beta, self.kappa, float(rho), self.alpha0,
                              self.beta0, self.kappa0, self.A, self.zeta)

    def gamma0(self, level: float) -> float:
        """``phi^{-1}(level / 2) - (rho + kappa beta)``: left bound of the level set for large t."""
        return self.profile.inverse(level / 2) - (self.rho + self.kappa * self.beta)


def _beta_window(f: Bistable, bound: float) -> float:
    """Largest b with ``f' <= bound`` on ``[-2b, 2b]`` and ``[1 - 2b, 1 + 2b]``."""
    def ok(b):
        s = np.concatenate([np.linspace(-2 * b, 2 * b, 201), np.linspace(1 - 2 * b, 1 + 2 * b, 201)])
        return bool(np.all(f.deriv(s) <= bound))

    lo, hi = 0.0, 0.25
    if ok(hi):
        return hi
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def perturbed_super(profile: WaveProfile, f: Bistable, alpha: float | None = None, beta: float | None = None,
                    kappa: float | None = None, rho: float = 0.0, window: float = 0.5) -> PerturbedSuper:
    """Constants for the large-time supersolution.

    ``alpha0 = -max(f'(0), f'(1))``. Near a stable zero f' exceeds its
    endpoint value on one side, so ``beta0`` is taken from the relaxed window
    ``f' <= -window * alpha0`` and the admissible alpha is capped at
    ``window * alpha0``.
    """
    alpha0 = -max(f.fprime0, f.fprime1)
    bound = -window * alpha0
    beta0 = _beta_window(f, bound)
    alpha = window * alpha0 if alpha is None else alpha
    if not 0 < alpha <= window * alpha0 + 1e-15:
        raise ValueError(f"alpha must lie in (0, {window * alpha0}]")
    beta = beta0 if beta is None else beta
    if not 0 < beta <= beta0 + 1e-15:
        raise ValueError(f"beta must lie in (0, {beta0}]")
    A = max(-profile.inverse(beta0), profile.inverse(1 - beta0))
    zz = np.linspace(-A, A, 2001)
    zeta = float(np.min(profile.derivative(zz)))
    kappa0 = (f.lipschitz + alpha) / (zeta * alpha)
    kappa = kappa0 if kappa is None else kappa
    return PerturbedSuper(profile, float(alpha), float(beta), float(kappa), float(rho), float(alpha0),
                          float(beta0), float(kappa0), float(A), zeta)


def fit_rho(ps: PerturbedSuper, x1, u0, step: float = 0.05, rho_min: float = -1e3) -> PerturbedSuper:
    """Smallest rho (on a grid of the given step) with ``w(0, x) >= u0`` at every cell."""
    x1 = np.asarray(x1, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    # w(0, x) = phi(x1 + rho) + beta >= u0 needs x1 + rho >= phi^{-1}(u0 - beta) where u0 > beta
    need = u0 > ps.beta
    if not need.any():
        return ps.with_rho(rho_min)
    lv = np.clip(u0[need] - ps.beta, 1e-300, None)
    inv = np.array([ps.profile.inverse(v) if v < ps.profile.phi[-1] else np.inf for v in lv])
    rho = float(np.max(inv - x1[need]))
    if not np.isfinite(rho):
        raise OutOfValidity("initial datum too close to 1 for the resolved profile")
    rho = np.ceil(rho / step) * step
    return ps.with_rho(rho)
