"""Radial dispersal kernels, their 1D marginals and the kernel mass field."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.integrate import quad
from scipy.special import i0, i1

from .errors import ZeroMass

QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-12, limit=200)


def _gaussian(r):
    return np.exp(-np.square(r))


def _uniform(r):
    return np.ones_like(np.asarray(r, dtype=float))


PROFILES: dict[str, Callable] = {"gaussian": _gaussian, "uniform": _uniform}
NONINCREASING = {"gaussian", "uniform"}


@dataclass(frozen=True)
class RadialKernel:
    """``J(r) = profile(r) / Z`` on ``0 <= r <= radius``, zero beyond.

    ``Z`` makes the radial extension ``z -> J(|z|)`` a probability density
    on R^dim.
    """

    name: str
    profile: Callable
    radius: float
    dim: int
    Z: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r >= 0.0) & (r <= self.radius)
        with np.errstate(invalid="ignore", over="ignore"):
            val = np.where(inside, self.profile(np.where(inside, r, 0.0)) / self.Z, 0.0)
        return val if val.ndim else float(val)

    @property
    def nonincreasing(self) -> bool:
        return self.name in NONINCREASING

    def mass(self) -> float:
        """Integral of the radial extension over R^dim (should be 1)."""
        return _radial_integral(self, lambda r: 1.0)

    def to_dict(self) -> dict:
        return {"profile": self.name, "radius": self.radius}


def _radial_integral(kernel, weight) -> float:
    """Integral over R^dim of ``J(|z|) * weight(|z|)`` via the radial reduction."""
    R = kernel.radius
    if kernel.dim == 1:
        val = 2.0 * quad(lambda r: kernel(r) * weight(r), 0.0, R, **QUAD_OPTS)[0]
    else:
        val = 2.0 * np.pi * quad(lambda r: kernel(r) * weight(r) * r, 0.0, R, **QUAD_OPTS)[0]
    return float(val)


def normalize(profile: str | Callable, radius: float, dim: int = 2, name: str | None = None) -> RadialKernel:
    """Build a unit-mass radial kernel from a nonnegative profile on [0, radius]."""
    if dim not in (1, 2):
        raise ValueError("only dimensions 1 and 2 are implemented")
    if radius <= 0:
        raise ZeroMass(f"support radius must be positive, got {radius}")
    if isinstance(profile, str):
        name = profile
        try:
            profile = PROFILES[profile]
        except KeyError:
            raise ValueError(f"unknown kernel profile {name!r}") from None
    name = name or getattr(profile, "__name__", "custom")
    if dim == 1:
        Z = 2.0 * quad(lambda r: float(profile(r)), 0.0, radius, **QUAD_OPTS)[0]
    else:
        Z = 2.0 * np.pi * quad(lambda r: float(profile(r)) * r, 0.0, radius, **QUAD_OPTS)[0]
    if not Z > 0.0:
        raise ZeroMass(f"profile has nonpositive integral {Z}")
    return RadialKernel(name, profile, float(radius), int(dim), float(Z))


def from_dict(spec: dict, dim: int = 2) -> RadialKernel:
    return normalize(spec.get("profile", "gaussian"), float(spec.get("radius", 1.0)), dim)


# ---------------------------------------------------------------------------
# 1D marginal
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class MarginalKernel:
    """Symmetric 1D kernel sampled at ``k * step`` for ``k = -K..K``.

    ``samples`` are density values, ``weights`` are the masses of the cells
    ``[(k - 1/2) step, (k + 1/2) step]`` and drive discrete convolutions.
    Built either from a radial kernel (continuum marginal) or from the
    lattice sums of a 2D grid operator (``lattice=True``).
    """

    radius: float
    step: float
    samples: np.ndarray
    weights: np.ndarray
    kernel: RadialKernel | None = None
    lattice: bool = False

    @property
    def offsets(self) -> np.ndarray:
        K = (len(self.weights) - 1) // 2
        return np.arange(-K, K + 1) * self.step

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def density(self, x):
        """Pointwise marginal density (continuum marginals only)."""
        if self.kernel is None:
            raise ValueError("lattice marginals have no pointwise density")
        return _marginal_density(self.kernel, x)

    def integral(self) -> float:
        """Total mass by adaptive quadrature of the density (Fubini check)."""
        if self.kernel is None:
            return self.mass
        R = self.radius
        return float(2.0 * quad(lambda x: _marginal_density(self.kernel, x), 0.0, R, **QUAD_OPTS)[0])

    def mgf(self, s: float) -> float:
        """Exponential moment: integral of J1(h) exp(s h) dh."""
        if self.kernel is None:
            return float(np.dot(self.weights, np.exp(s * self.offsets)))
        k = self.kernel
        if k.dim == 1:
            return _radial_integral(k, lambda r: np.cosh(s * r))
        return _radial_integral(k, lambda r: i0(s * r))

    def dmgf(self, s: float) -> float:
        """Derivative of :meth:`mgf` in ``s``."""
        if self.kernel is None:
            h = self.offsets
            return float(np.dot(self.weights, h * np.exp(s * h)))
        k = self.kernel
        if k.dim == 1:
            return _radial_integral(k, lambda r: r * np.sinh(s * r))
        return _radial_integral(k, lambda r: r * i1(s * r))

    def second_moment(self) -> float:
        return float(np.dot(self.weights, self.offsets ** 2))


def _marginal_density(kernel: RadialKernel, x):
    x = np.abs(np.asarray(x, dtype=float))
    if kernel.dim == 1:
        return kernel(x)
    R = kernel.radius

    def one(xx):
        if xx > R:
            return 0.0
        top = np.sqrt(max(R * R - xx * xx, 0.0))
        return 2.0 * quad(lambda y: kernel(np.hypot(xx, y)), 0.0, top, **QUAD_OPTS)[0]

    if x.ndim == 0:
        return float(one(float(x)))
    return np.array([one(float(v)) for v in x.ravel()]).reshape(x.shape)


def marginal(kernel: RadialKernel, step: float | None = None) -> MarginalKernel:
    """Integrate the radial kernel over the transverse direction.

    Values for negative offsets are mirrored from positive ones, so the
    samples and weights are even bit for bit.
    """
    R = kernel.radius
    step = float(step if step is not None else R / 40.0)
    K = int(np.ceil(R / step - 1e-12))
    pos = np.arange(0, K + 1) * step
    dens = _marginal_density(kernel, pos)
    cell = np.empty(K + 1)
    for k in range(K + 1):
        lo, hi = max((k - 0.5) * step, 0.0), min((k + 0.5) * step, R)
        if lo >= hi:
            cell[k] = 0.0
            continue
        cell[k] = quad(lambda x: _marginal_density(kernel, x), lo, hi, **QUAD_OPTS)[0]
    cell[0] *= 2.0  # the centre cell spans both sides of 0
    samples = np.concatenate([dens[:0:-1], dens])
    weights = np.concatenate([cell[:0:-1], cell])
    return MarginalKernel(R, step, samples, weights, kernel, False)


def _lattice_weights(kernel: RadialKernel, h: float) -> np.ndarray:
    R = kernel.radius
    K = int(np.floor(R / h + 1e-9))
    j = np.arange(-K, K + 1)
    if kernel.dim == 1:
        return h * kernel(h * np.abs(j))
    k1, k2 = np.meshgrid(j, j, indexing="ij")
    return h * h * kernel(h * np.hypot(k1, k2))


def lattice_mass(kernel: RadialKernel, h: float) -> float:
    """Collocation sum of the kernel over the full lattice ball of spacing ``h``."""
    return float(_lattice_weights(kernel, h).sum())


def lattice_marginal(kernel: RadialKernel, h: float, renormalize: bool = True) -> MarginalKernel:
    """Marginal seen by the collocation operator on a lattice of spacing ``h``.

    For a field depending on x1 only, an interior grid row of the 2D operator
    acts exactly as the 1D convolution with these weights.
    """
    w = _lattice_weights(kernel, h)
    if renormalize:
        w = w / w.sum()
    K = (w.shape[0] - 1) // 2
    pos = (w.sum(axis=1) if w.ndim == 2 else w)[K:]
    weights = np.concatenate([pos[:0:-1], pos])
    return MarginalKernel(kernel.radius, float(h), weights / h, weights, None, True)


# ---------------------------------------------------------------------------
# kernel weights on a grid
# ---------------------------------------------------------------------------
def kernel_matrix(grid, metric, kernel: RadialKernel, threads: int = 1,
                  renormalize: bool = True) -> sparse.csr_matrix:
    """Symmetric CSR matrix ``w_ij = area * J(delta(x_i, x_j)) / S`` incl. the diagonal.

    ``S`` is the collocation mass of the full lattice ball (1 without
    ``renormalize``), so a cell far from K and from the box edges has row sum
    1 up to rounding. Each unordered pair is evaluated once and mirrored, so
    ``w_ij == w_ji`` exactly.
    """
    from .geometry import pair_distances

    S = lattice_mass(kernel, grid.h) if renormalize else 1.0
    i, j, d = pair_distances(grid, metric, kernel.radius, threads=threads)
    w_pair = grid.area * kernel(d) / S
    keep = w_pair > 0.0
    i, j, w_pair = i[keep], j[keep], w_pair[keep]
    n = grid.n
    diag = np.full(n, grid.area * kernel(0.0) / S)
    rows = np.concatenate([i, j, np.arange(n)])
    cols = np.concatenate([j, i, np.arange(n)])
    vals = np.concatenate([w_pair, w_pair, diag])
    keep = vals > 0.0
    W = sparse.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n))
    W.sort_indices()
    return W


def row_sums(W: sparse.csr_matrix) -> np.ndarray:
    """Row sums in CSR storage order (the single summation path used everywhere)."""
    counts = np.diff(W.indptr)
    rows = np.repeat(np.arange(W.shape[0]), counts)
    return np.bincount(rows, weights=W.data, minlength=W.shape[0])


@dataclass(frozen=True)
class JDeltaField:
    values: np.ndarray
    inf: float
    sup: float


def jdelta_field(grid, metric, kernel: RadialKernel, W: sparse.csr_matrix | None = None,
                 margin: float | None = None) -> JDeltaField:
    """Discrete kernel mass ``sum_j w_ij`` at every cell.

    ``inf``/``sup`` are taken over cells at least ``margin`` from the box
    edges (default: all cells). The box is a truncation of the plane, so
    cells near its edges see less mass than any point of the true domain.
    """
    if W is None:
        W = kernel_matrix(grid, metric, kernel)
    vals = row_sums(W)
    sel = vals if margin is None else vals[grid.interior_mask(margin)]
    return JDeltaField(vals, float(sel.min()), float(sel.max()))
