"""Bistable reaction terms and the checks the rest of the package relies on.

Every ``Bistable`` is evaluated on the whole real line through its linear
extension: slope ``f'(0)`` below 0, slope ``f'(1)`` above 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .errors import InvalidNonlinearity

N_SIGN_SAMPLES = 10_000


@dataclass(frozen=True)
class Bistable:
    """A bistable nonlinearity with zeros 0 < theta < 1.

    Use :meth:`cubic` or :meth:`tabulated` rather than the constructor.
    """

    kind: str
    theta: float
    scale: float = 1.0
    _spline: CubicHermiteSpline | None = field(default=None, repr=False, compare=False)

    # -- construction ------------------------------------------------------
    @classmethod
    def cubic(cls, theta: float, scale: float = 1.0) -> "Bistable":
        """``f(u) = scale * u (u - theta) (1 - u)``."""
        if not 0.0 < theta < 1.0:
            raise InvalidNonlinearity(f"theta must lie in (0, 1), got {theta}")
        if scale <= 0.0:
            raise InvalidNonlinearity(f"scale must be positive, got {scale}")
        return cls("cubic", float(theta), float(scale))

    @classmethod
    def tabulated(cls, u, values, derivatives, lipschitz_bound: float = 1e3) -> "Bistable":
        """Piecewise cubic Hermite interpolant of samples on [0, 1].

        The derivative samples must be Lipschitz with constant at most
        ``lipschitz_bound`` (a sampled stand-in for f in C^{1,1}).
        """
        u = np.asarray(u, dtype=float)
        values = np.asarray(values, dtype=float)
        derivatives = np.asarray(derivatives, dtype=float)
        if u.ndim != 1 or u.shape != values.shape or u.shape != derivatives.shape:
            raise InvalidNonlinearity("u, values and derivatives must be 1D arrays of equal length")
        if u[0] != 0.0 or u[-1] != 1.0 or np.any(np.diff(u) <= 0):
            raise InvalidNonlinearity("sample points must increase strictly from 0 to 1")
        if values[0] != 0.0 or values[-1] != 0.0:
            raise InvalidNonlinearity("f(0) and f(1) must be exactly 0")
        slopes = np.abs(np.diff(derivatives)) / np.diff(u)
        if slopes.max() > lipschitz_bound:
            raise InvalidNonlinearity(
                f"derivative samples not Lipschitz within {lipschitz_bound} (max slope {slopes.max():.3g})")
        spline = CubicHermiteSpline(u, values, derivatives)
        inner = spline.roots(extrapolate=False)
        inner = inner[(inner > 1e-12) & (inner < 1 - 1e-12)]
        if len(inner) != 1:
            raise InvalidNonlinearity(f"expected exactly one interior zero, found {len(inner)}")
        return cls("tabulated", float(inner[0]), 1.0, spline)

    # -- evaluation on [0, 1] ---------------------------------------------
    def _f01(self, u):
        if self.kind == "cubic":
            return self.scale * u * (u - self.theta) * (1.0 - u)
        return self._spline(u)

    def _df01(self, u):
        if self.kind == "cubic":
            th = self.theta
            return self.scale * (-3.0 * u * u + 2.0 * (1.0 + th) * u - th)
        return self._spline(u, 1)

    # -- public calculus on the whole line ---------------------------------
    def eval(self, u):
        """Linearly extended nonlinearity, vectorised."""
        u = np.asarray(u, dtype=float)
        inside = np.clip(u, 0.0, 1.0)
        out = self._f01(inside)
        out = np.where(u < 0.0, self.fprime0 * u, out)
        out = np.where(u > 1.0, self.fprime1 * (u - 1.0), out)
        return out if out.ndim else float(out)

    __call__ = eval

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        out = self._df01(np.clip(u, 0.0, 1.0))
        out = np.where(u < 0.0, self.fprime0, out)
        out = np.where(u > 1.0, self.fprime1, out)
        return out if out.ndim else float(out)

    # -- cached scalars ------------------------------------------------------
    @property
    def fprime0(self) -> float:
        return float(self._df01(0.0))

    @property
    def fprime1(self) -> float:
        return float(self._df01(1.0))

    @property
    def fprime_theta(self) -> float:
        return float(self._df01(self.theta))

    @property
    def max_fprime(self) -> float:
        """max of f' over [0, 1]."""
        if self.kind == "cubic":
            th = self.theta
            return self.scale * (1.0 - th + th * th) / 3.0
        s = np.linspace(0.0, 1.0, N_SIGN_SAMPLES + 1)
        return float(self._df01(s).max())

    @property
    def lipschitz(self) -> float:
        """sup over the real line of |f'| for the extended nonlinearity."""
        if self.kind == "cubic":
            inner = max(self.max_fprime, abs(self.fprime0), abs(self.fprime1))
        else:
            s = np.linspace(0.0, 1.0, N_SIGN_SAMPLES + 1)
            inner = float(np.abs(self._df01(s)).max())
        return max(inner, abs(self.fprime0), abs(self.fprime1))

    @property
    def integral(self) -> float:
        if self.kind == "cubic":
            return self.scale * (1.0 - 2.0 * self.theta) / 12.0
        return float(quad(self._f01, 0.0, 1.0, points=[self.theta], epsabs=1e-13)[0])

    def pair_defect_constant(self, n: int = 400) -> float:
        """Sampled sup of |f(a) + f(b) - f(a + b)| / (ab) over a, b in (0, 1], a + b <= 1."""
        s = np.linspace(0.0, 1.0, n + 1)[1:]
        a, b = np.meshgrid(s, s, indexing="ij")
        ok = a + b <= 1.0
        a, b = a[ok], b[ok]
        return float(np.max(np.abs(self.eval(a) + self.eval(b) - self.eval(a + b)) / (a * b)))

    def to_dict(self) -> dict:
        if self.kind != "cubic":
            raise InvalidNonlinearity("only cubic nonlinearities serialise to JSON")
        return {"kind": "cubic", "theta": self.theta, "scale": self.scale}

    @classmethod
    def from_dict(cls, spec: dict) -> "Bistable":
        kind = spec.get("kind", "cubic")
        if kind != "cubic":
            raise InvalidNonlinearity(f"unknown nonlinearity kind {kind!r}")
        return cls.cubic(spec["theta"], spec.get("scale", 1.0))


@dataclass(frozen=True)
class ValidationReport:
    c2_ok: bool
    c5_ok: bool
    nondegenerate_ok: bool
    omega: float
    integral: float
    max_fprime: float
    jdelta_inf: float
    messages: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.c2_ok and self.c5_ok and self.nondegenerate_ok


def validate(f: Bistable, jdelta_inf: float, jdelta_sup: float = 1.0) -> ValidationReport:
    """Check the bistable sign pattern, the existence condition and nondegeneracy.

    ``jdelta_inf``/``jdelta_sup`` are the extremes of the kernel mass field
    over the domain; ``omega = sup|f'| + 2 sup J^delta`` is the growth rate
    used by the a priori bound.
    """
    msgs = []
    s = np.linspace(0.0, 1.0, N_SIGN_SAMPLES + 1)[1:-1]
    vals = f.eval(s)
    below, above = s < f.theta, s > f.theta
    sign_ok = bool(np.all(vals[below] < 0.0) and np.all(vals[above] > 0.0))
    zeros_ok = all(abs(f.eval(x)) <= 1e-12 for x in (0.0, f.theta, 1.0))
    deriv_ok = f.fprime0 < 0.0 and f.fprime_theta > 0.0 and f.fprime1 < 0.0
    c2_ok = sign_ok and zeros_ok and deriv_ok
    if not sign_ok:
        msgs.append("(C2) sign pattern violated")
    if not zeros_ok:
        msgs.append("(C2) f(0), f(theta), f(1) not all zero")
    if not deriv_ok:
        msgs.append("(C2) derivative signs at 0, theta, 1 violated")

    integral = f.integral
    mfp = f.max_fprime
    c5_ok = integral > 0.0 and mfp < 1.0
    if integral <= 0.0:
        msgs.append(f"(C5) integral of f over [0,1] = {integral:.6g} <= 0")
    if mfp >= 1.0:
        msgs.append(f"(C5) max f' = {mfp:.6g} >= 1")

    nondeg = mfp < jdelta_inf
    if not nondeg:
        msgs.append(f"nondegeneracy: max f' = {mfp:.6g} >= inf J^delta = {jdelta_inf:.6g}")

    omega = f.lipschitz + 2.0 * jdelta_sup
    return ValidationReport(c2_ok, c5_ok, bool(nondeg), float(omega), float(integral),
                            float(mfp), float(jdelta_inf), tuple(msgs))
