"""Obstacles, grids, visibility and quasi-Euclidean distances.

An obstacle K is a finite union of convex parts (disks, convex polygons,
or intervals in 1D). Geodesic distances are shortest paths in the closure
of the complement of K, found on the visibility graph spanned by the
endpoints and the obstacle vertices (disks contribute the vertices of a
circumscribed polygon; their visibility tests stay exact).
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.spatial import cKDTree

from .errors import DisconnectedDomain, EmptyDomain, InvalidGeometry, PointInsideObstacle

UNREACHABLE = float("inf")  # explicit marker for points in different components
TOL = 1e-9


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidGeometry(f"disk radius must be positive, got {self.radius}")

    def contains(self, pts, strict=False):
        d = np.hypot(*(np.atleast_2d(pts) - np.asarray(self.center)).T)
        return d < self.radius - TOL if strict else d <= self.radius + TOL

    def blocks(self, p, q):
        """True where the open segment p-q meets the open disk (vectorised over rows)."""
        c = np.asarray(self.center)
        d = q - p
        dd = np.einsum("ij,ij->i", d, d)
        t = np.where(dd > 0, np.einsum("ij,ij->i", c - p, d) / np.where(dd > 0, dd, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        closest = p + t[:, None] * d
        dist = np.hypot(*(closest - c).T)
        return dist < self.radius - TOL * max(1.0, self.radius)

    def vertices(self, step):
        # circumscribed regular polygon: every edge is tangent to the circle
        m = max(int(np.ceil(2 * np.pi * self.radius / step)), 8)
        a = 2 * np.pi * np.arange(m) / m
        rv = self.radius / np.cos(np.pi / m) * (1 + 1e-12)
        return np.column_stack([self.center[0] + rv * np.cos(a), self.center[1] + rv * np.sin(a)])

    def bounds(self):
        (x, y), r = self.center, self.radius
        return x - r, x + r, y - r, y + r

    def to_dict(self):
        return {"disk": {"center": list(self.center), "radius": self.radius}}


@dataclass(frozen=True)
class Polygon:
    """Convex polygon; vertices are stored counterclockwise."""

    verts: tuple[tuple[float, float], ...]

    def __post_init__(self):
        v = np.asarray(self.verts, dtype=float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            raise InvalidGeometry("a polygon needs at least 3 planar vertices")
        object.__setattr__(self, "verts", tuple(map(tuple, v.tolist())))
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.all(cross <= 1e-14):
            v = v[::-1]
            object.__setattr__(self, "verts", tuple(map(tuple, v.tolist())))
            e = np.roll(v, -1, axis=0) - v
            cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if not np.all(cross > -1e-14):
            raise InvalidGeometry("polygon is not convex")
        # convex and simple: total turning must be exactly one revolution
        ang = np.arctan2(e[:, 1], e[:, 0])
        turn = np.sum(np.mod(np.diff(np.append(ang, ang[0])), 2 * np.pi))
        if abs(turn - 2 * np.pi) > 1e-6:
            raise InvalidGeometry("polygon is not simple")

    @cached_property
    def _halfplanes(self):
        v = np.asarray(self.verts, dtype=float)
        e = np.roll(v, -1, axis=0) - v
        n = np.column_stack([e[:, 1], -e[:, 0]])
        n /= np.hypot(*n.T)[:, None]
        return n, np.einsum("ij,ij->i", n, v)

    def contains(self, pts, strict=False):
        n, c = self._halfplanes
        s = np.atleast_2d(pts) @ n.T - c
        return np.all(s < -TOL, axis=1) if strict else np.all(s <= TOL, axis=1)

    def blocks(self, p, q):
        """Cyrus-Beck clip of the open segment against the open polygon."""
        n, c = self._halfplanes
        d = q - p
        a = p @ n.T - c + TOL  # shrink the polygon by TOL
        b = d @ n.T
        lo = np.zeros(len(p))
        hi = np.ones(len(p))
        par = np.abs(b) < 1e-15
        with np.errstate(divide="ignore", invalid="ignore"):
            tcut = -a / b
        lo = np.maximum(lo, np.where(~par & (b < 0), tcut, -np.inf).max(axis=1))
        hi = np.minimum(hi, np.where(~par & (b > 0), tcut, np.inf).min(axis=1))
        outside_parallel = np.any(par & (a >= 0), axis=1)
        return (lo < hi - 1e-12) & ~outside_parallel

    def vertices(self, step):
        return np.asarray(self.verts, dtype=float)

    def edges(self):
        v = np.asarray(self.verts, dtype=float)
        return v, np.roll(v, -1, axis=0)

    def bounds(self):
        v = np.asarray(self.verts)
        return v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max()

    def to_dict(self):
        return {"polygon": {"vertices": [list(p) for p in self.verts]}}


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise InvalidGeometry("interval needs lo < hi")

    def contains(self, pts, strict=False):
        x = np.atleast_2d(pts)[:, 0]
        if strict:
            return (x > self.lo + TOL) & (x < self.hi - TOL)
        return (x >= self.lo - TOL) & (x <= self.hi + TOL)

    def blocks(self, p, q):
        a = np.minimum(p[:, 0], q[:, 0])
        b = np.maximum(p[:, 0], q[:, 0])
        return (a < self.hi - TOL) & (b > self.lo + TOL)

    def vertices(self, step):
        return np.array([[self.lo, 0.0], [self.hi, 0.0]])

    def bounds(self):
        return self.lo, self.hi, 0.0, 0.0

    def to_dict(self):
        return {"interval": [self.lo, self.hi]}


# ---------------------------------------------------------------------------
# obstacle
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Obstacle:
    """Union of convex parts. ``step`` is the arc-length step for disks."""

    parts: tuple = ()
    step: float = 0.125

    @property
    def empty(self) -> bool:
        return len(self.parts) == 0

    def contains(self, pts, strict=False):
        """Membership in K (closed) or in its interior (``strict=True``).

        The interior test is per part, so points on a boundary shared by
        two parts count as boundary points.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros(len(pts), dtype=bool)
        for part in self.parts:
            out |= part.contains(pts, strict)
        return out

    @cached_property
    def _internal_edges(self):
        # polygon edges lying inside the union (shared walls between parts)
        segs = []
        for k, part in enumerate(self.parts):
            if not isinstance(part, Polygon):
                continue
            a, b = part.edges()
            n, _ = part._halfplanes
            mid = 0.5 * (a + b)
            eps = 1e-7
            for e in range(len(a)):
                probe = mid[e] + eps * n[e]
                others = [p for j, p in enumerate(self.parts) if j != k]
                if any(p.contains(probe[None])[0] for p in others):
                    segs.append((a[e], b[e]))
        return segs

    def blocks(self, p, q):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        q = np.atleast_2d(np.asarray(q, dtype=float))
        out = np.zeros(len(p), dtype=bool)
        for part in self.parts:
            out |= part.blocks(p, q)
        for a, b in self._internal_edges:
            out |= _collinear_overlap(p, q, a, b)
        return out

    @cached_property
    def nodes(self) -> np.ndarray:
        """Visibility-graph vertices: part vertices not inside the open union."""
        if self.empty:
            return np.zeros((0, 2))
        v = np.vstack([p.vertices(self.step) for p in self.parts])
        keep = ~self.contains(v, strict=True)
        return v[keep]

    @cached_property
    def node_distances(self) -> np.ndarray:
        """All-pairs geodesic distances between :attr:`nodes`."""
        v = self.nodes
        m = len(v)
        if m == 0:
            return np.zeros((0, 0))
        i, j = np.triu_indices(m, 1)
        ok = ~self.blocks(v[i], v[j])
        w = np.hypot(*(v[i] - v[j]).T)[ok]
        g = csr_matrix((w, (i[ok], j[ok])), shape=(m, m))
        return shortest_path(g, method="D", directed=False)

    @cached_property
    def _node_tree(self):
        return cKDTree(self.nodes) if len(self.nodes) else None

    def bounds(self):
        b = np.array([p.bounds() for p in self.parts])
        return b[:, 0].min(), b[:, 1].max(), b[:, 2].min(), b[:, 3].max()

    def to_dict(self):
        return {"parts": [p.to_dict() for p in self.parts], "step": self.step}


def _collinear_overlap(p, q, a, b):
    """Segments p-q overlapping the segment a-b along a positive length."""
    e = b - a
    L = np.hypot(*e)
    u = e / L
    cp = (p - a) @ np.array([-u[1], u[0]])
    cq = (q - a) @ np.array([-u[1], u[0]])
    col = (np.abs(cp) < 1e-9) & (np.abs(cq) < 1e-9)
    sp = (p - a) @ u
    sq = (q - a) @ u
    lo = np.maximum(np.minimum(sp, sq), 0.0)
    hi = np.minimum(np.maximum(sp, sq), L)
    return col & (hi - lo > 1e-9)


def obstacle_from_dict(spec: dict | None, step: float | None = None) -> Obstacle:
    if not spec:
        return Obstacle((), step or 0.125)
    if "builtin" in spec:
        params = dict(spec.get("params", {}))
        if step is not None:
            params.setdefault("step", step)
        name = spec["builtin"]
        try:
            return BUILTIN_OBSTACLES[name](**params)
        except KeyError:
            raise InvalidGeometry(f"unknown builtin obstacle {name!r}") from None
    parts = []
    for item in spec.get("parts", []):
        if "disk" in item:
            parts.append(Disk(tuple(item["disk"]["center"]), float(item["disk"]["radius"])))
        elif "polygon" in item:
            parts.append(Polygon(tuple(map(tuple, item["polygon"]["vertices"]))))
        elif "interval" in item:
            parts.append(Interval(*map(float, item["interval"])))
        else:
            raise InvalidGeometry(f"unknown obstacle part {item!r}")
    return Obstacle(tuple(parts), float(spec.get("step", step or 0.125)))


# ---------------------------------------------------------------------------
# built-in obstacles
# ---------------------------------------------------------------------------
def disk_obstacle(center=(0.0, 0.0), radius=4.0, step=0.125) -> Obstacle:
    return Obstacle((Disk(tuple(center), float(radius)),), step)


def ellipse_polygon(center, a, b, angle=0.0, n=48) -> Polygon:
    t = 2 * np.pi * np.arange(n) / n
    x, y = a * np.cos(t), b * np.sin(t)
    ca, sa = np.cos(angle), np.sin(angle)
    return Polygon(tuple(zip(center[0] + ca * x - sa * y, center[1] + sa * x + ca * y)))


def ellipse_cluster(step=0.125, n=48) -> Obstacle:
    """Unit disk surrounded by four ellipses."""
    parts = (
        Disk((0.0, 0.0), 1.0),
        ellipse_polygon((-5.0, 5.0), 2.5, 1.0, 0.3, n),
        ellipse_polygon((-5.0, -5.0), 2.5, 1.0, -0.3, n),
        ellipse_polygon((-12.0, 2.5), 1.0, 3.0, 0.0, n),
        ellipse_polygon((-12.0, -6.0), 1.5, 2.0, 0.5, n),
    )
    return Obstacle(parts, step)


def annulus_channel(r_in=2.0, r_out=5.0, channel_width=0.6, channel_angle=0.0,
                    center=(0.0, 0.0), segments=72, step=0.125) -> Obstacle:
    """Annulus between radii r_in and r_out with a straight radial channel.

    The ring is a union of overlapping convex quadrilaterals whose outer
    edges are tangent to the outer circle and whose inner vertices lie on
    the inner circle. The channel is a slot of constant width centred on
    the ray at ``channel_angle``.
    """
    if not 0 < r_in < r_out:
        raise InvalidGeometry("annulus needs 0 < r_in < r_out")
    cx, cy = center
    # angular half-width of the slot measured at the inner radius
    half = np.arcsin(min(channel_width / (2 * r_in), 1.0)) if channel_width > 0 else 0.0
    span = 2 * np.pi - 2 * half
    m = max(int(np.ceil(segments * span / (2 * np.pi))), 3)
    dth = span / m
    over = 0.02 * dth  # overlap so that neighbouring parts share no wall
    ro = r_out / np.cos(dth / 2 + over)
    parts = []
    ca, sa = np.cos(channel_angle), np.sin(channel_angle)
    for k in range(m):
        a0 = half + k * dth - (over if k > 0 else 0.0)
        a1 = half + (k + 1) * dth + (over if k < m - 1 else 0.0)
        loc = [(r_in * np.cos(a0), r_in * np.sin(a0)), (ro * np.cos(a0), ro * np.sin(a0)),
               (ro * np.cos(a1), ro * np.sin(a1)), (r_in * np.cos(a1), r_in * np.sin(a1))]
        if channel_width > 0 and k in (0, m - 1):
            # end faces parallel to the slot axis keep its width constant
            y = channel_width / 2 * (1 if k == 0 else -1)
            xo = np.sqrt(max(ro * ro - y * y, 0.0))
            xi = np.sqrt(max(r_in * r_in - y * y, 0.0))
            if k == 0:
                loc[0], loc[1] = (xi, y), (xo, y)
            else:
                loc[3], loc[2] = (xi, y), (xo, y)
        verts = tuple((cx + ca * x - sa * y, cy + sa * x + ca * y) for x, y in loc)
        parts.append(Polygon(verts))
    return Obstacle(tuple(parts), step)


def square_annulus_channel(inner=2.0, outer=3.0, channel_width=0.6, side="right",
                           center=(0.0, 0.0), step=0.125) -> Obstacle:
    """Difference of two axis-parallel squares (half-sizes ``inner`` < ``outer``) with a slot."""
    if not 0 < inner < outer:
        raise InvalidGeometry("square annulus needs 0 < inner < outer")
    cx, cy = center
    o, i, w = outer, inner, channel_width / 2
    # bars overlap in the corners so no wall is shared
    bars = [
        [(-o, i), (o, i), (o, o), (-o, o)],        # top
        [(-o, -o), (o, -o), (o, -i), (-o, -i)],    # bottom
        [(-o, -o), (-i, -o), (-i, o), (-o, o)],    # left
    ]
    if w > 0:
        bars += [[(i, -o), (o, -o), (o, -w), (i, -w)], [(i, w), (o, w), (o, o), (i, o)]]
    else:
        bars.append([(i, -o), (o, -o), (o, o), (i, o)])
    rot = {"right": 0.0, "top": np.pi / 2, "left": np.pi, "bottom": -np.pi / 2}[side]
    c, s = np.cos(rot), np.sin(rot)
    parts = tuple(Polygon(tuple((cx + c * x - s * y, cy + s * x + c * y) for x, y in b)) for b in bars)
    return Obstacle(parts, step)


BUILTIN_OBSTACLES = {
    "disk": disk_obstacle,
    "ellipse_cluster": ellipse_cluster,
    "annulus_channel": annulus_channel,
    "square_annulus_channel": square_annulus_channel,
}


# ---------------------------------------------------------------------------
# visibility and distances between points
# ---------------------------------------------------------------------------
def _pt(p):
    p = np.asarray(p, dtype=float).ravel()
    return np.array([p[0], p[1] if len(p) > 1 else 0.0])


def visible(p, q, obstacle: Obstacle) -> bool:
    """Whether the open segment (p, q) avoids the interior of the obstacle."""
    if obstacle.empty:
        return True
    return not bool(obstacle.blocks(_pt(p)[None], _pt(q)[None])[0])


def geodesic_distance(p, q, obstacle: Obstacle) -> float:
    """Shortest-path length in the closed complement of the obstacle."""
    p, q = _pt(p), _pt(q)
    if obstacle.empty:
        return float(np.hypot(*(p - q)))
    inside = obstacle.contains(np.vstack([p, q]), strict=True)
    if inside.any():
        raise PointInsideObstacle("endpoint lies in the interior of the obstacle")
    if visible(p, q, obstacle):
        return float(np.hypot(*(p - q)))
    v = obstacle.nodes
    if len(v) == 0:
        return UNREACHABLE
    # Dijkstra on {p} + nodes + {q}; edges between nodes come precomputed
    D = obstacle.node_distances
    vp = ~obstacle.blocks(np.repeat(p[None], len(v), 0), v)
    vq = ~obstacle.blocks(np.repeat(q[None], len(v), 0), v)
    if not vp.any() or not vq.any():
        return UNREACHABLE
    dp = np.hypot(*(v[vp] - p).T)
    dq = np.hypot(*(v[vq] - q).T)
    best = np.min(dp[:, None] + D[np.ix_(vp, vq)] + dq[None, :])
    return float(best) if np.isfinite(best) else UNREACHABLE


def geodesic_dijkstra(p, q, obstacle: Obstacle) -> float:
    """Plain heap-based Dijkstra over the full visibility graph (reference path)."""
    p, q = _pt(p), _pt(q)
    pts = np.vstack([p, q, obstacle.nodes])
    m = len(pts)
    dist = np.full(m, np.inf)
    dist[0] = 0.0
    heap = [(0.0, 0)]
    done = np.zeros(m, dtype=bool)
    while heap:
        d, k = heapq.heappop(heap)
        if done[k]:
            continue
        done[k] = True
        if k == 1:
            return float(d)
        others = np.nonzero(~done)[0]
        ok = ~obstacle.blocks(np.repeat(pts[k][None], len(others), 0), pts[others])
        for j, w in zip(others[ok], np.hypot(*(pts[others[ok]] - pts[k]).T)):
            if d + w < dist[j]:
                dist[j] = d + w
                heapq.heappush(heap, (d + w, j))
    return UNREACHABLE


@dataclass(frozen=True)
class Metric:
    """Euclidean, geodesic, or ``w * geodesic + (1 - w) * Euclidean``."""

    kind: str = "euclidean"
    weight: float = 0.0

    def __post_init__(self):
        if self.kind not in ("euclidean", "geodesic", "mix"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == "mix" and not 0.0 <= self.weight <= 1.0:
            raise ValueError("mix weight must lie in [0, 1]")

    @classmethod
    def euclidean(cls):
        return cls("euclidean", 0.0)

    @classmethod
    def geodesic(cls):
        return cls("geodesic", 1.0)

    @classmethod
    def mix(cls, w):
        return cls("mix", float(w))

    @property
    def geo_weight(self) -> float:
        return {"euclidean": 0.0, "geodesic": 1.0}.get(self.kind, self.weight)

    def to_dict(self):
        return {"kind": self.kind, "weight": self.weight} if self.kind == "mix" else {"kind": self.kind}

    @classmethod
    def from_dict(cls, spec):
        if isinstance(spec, str):
            return cls(spec, 1.0 if spec == "geodesic" else 0.0)
        kind = spec.get("kind", "euclidean")
        return cls(kind, float(spec.get("weight", 1.0 if kind == "geodesic" else 0.0)))


def distance(metric: Metric, p, q, obstacle: Obstacle) -> float:
    p, q = _pt(p), _pt(q)
    e = float(np.hypot(*(p - q)))
    w = metric.geo_weight
    if w == 0.0:
        return e
    g = geodesic_distance(p, q, obstacle)
    if g == UNREACHABLE:
        return UNREACHABLE
    return w * g + (1.0 - w) * e


# ---------------------------------------------------------------------------
# domain and grid
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Domain:
    """Box ``(a1, b1, a2, b2)`` (or ``(a, b)`` in 1D) minus an obstacle, sampled at spacing h."""

    box: tuple
    obstacle: Obstacle = field(default_factory=Obstacle)
    h: float = 0.25

    @property
    def dim(self) -> int:
        return 1 if len(self.box) == 2 else 2

    def to_dict(self):
        return {"box": list(self.box), "h": self.h, "obstacle": self.obstacle.to_dict()}


@dataclass(frozen=True, eq=False)
class Grid:
    domain: Domain
    centers: np.ndarray  # (n, 2); second coordinate is 0 in 1D
    lattice: np.ndarray  # (n, 2) integer lattice coordinates
    index: np.ndarray  # lattice shape, cell index or -1
    components: int

    @property
    def h(self) -> float:
        return self.domain.h

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def area(self) -> float:
        return self.h ** self.dim

    @property
    def n(self) -> int:
        return len(self.centers)

    @property
    def obstacle(self) -> Obstacle:
        return self.domain.obstacle

    @property
    def x1(self) -> np.ndarray:
        return self.centers[:, 0]

    def interior_mask(self, margin: float) -> np.ndarray:
        """Cells whose centre is at least ``margin`` from every box edge."""
        box = self.domain.box
        x = self.centers
        m = (x[:, 0] - box[0] >= margin) & (box[1] - x[:, 0] >= margin)
        if self.dim == 2:
            m &= (x[:, 1] - box[2] >= margin) & (box[3] - x[:, 1] >= margin)
        return m

    def neighbors(self, i: int, radius: float) -> np.ndarray:
        """Active cells whose centres lie within Euclidean ``radius`` of cell i."""
        tree = cKDTree(self.centers)
        return np.sort(np.array(tree.query_ball_point(self.centers[i], radius * (1 + 1e-12)), dtype=int))


def build_grid(domain: Domain, require_connected: bool = True) -> Grid:
    h = domain.h
    if not h > 0:
        raise InvalidGeometry("spacing must be positive")
    box = domain.box
    n1 = int(round((box[1] - box[0]) / h))
    if domain.dim == 1:
        shape = (n1,)
        c1 = box[0] + (np.arange(n1) + 0.5) * h
        centers = np.column_stack([c1, np.zeros(n1)])
        lat = np.column_stack([np.arange(n1), np.zeros(n1, dtype=int)])
    else:
        n2 = int(round((box[3] - box[2]) / h))
        shape = (n1, n2)
        i1, i2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
        lat = np.column_stack([i1.ravel(), i2.ravel()])
        centers = np.column_stack([box[0] + (lat[:, 0] + 0.5) * h, box[2] + (lat[:, 1] + 0.5) * h])
    active = ~domain.obstacle.contains(centers, strict=True) if not domain.obstacle.empty \
        else np.ones(len(centers), dtype=bool)
    if not active.any():
        raise EmptyDomain("no active cells")
    mask = active.reshape(shape)
    _, ncomp = ndimage.label(mask)  # 4-connectivity in 2D, adjacency in 1D
    if ncomp > 1 and require_connected:
        raise DisconnectedDomain(f"active region has {ncomp} components")
    index = np.full(shape, -1, dtype=np.int64)
    index[mask] = np.arange(int(active.sum()))
    return Grid(domain, centers[active], lat[active], index, int(ncomp))


# ---------------------------------------------------------------------------
# pairwise distances within the kernel range
# ---------------------------------------------------------------------------
def pair_distances(grid: Grid, metric: Metric, radius: float, threads: int = 1):
    """All unordered cell pairs ``i < j`` with ``delta(x_i, x_j) <= radius``.

    Returns ``(i, j, d)`` sorted by ``(i, j)``. Visible pairs use the
    lattice distance ``h * |k_i - k_j|`` so that weights are exactly
    translation invariant. Hidden pairs are resolved through the obstacle
    vertices: ``x_i -> u -> ... -> v -> x_j`` with precomputed node distances,
    which is the shortest path on the visibility graph truncated at range.
    """
    tree = cKDTree(grid.centers)
    pairs = tree.query_pairs(radius * (1 + 1e-9) + 1e-12, output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    i, j = pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64)
    dk = grid.lattice[i] - grid.lattice[j]
    d = grid.h * np.hypot(dk[:, 0], dk[:, 1])
    keep = d <= radius
    i, j, d = i[keep], j[keep], d[keep]
    w = metric.geo_weight
    obs = grid.obstacle
    if w == 0.0 or obs.empty:
        return i, j, d
    x = grid.centers
    hidden = obs.blocks(x[i], x[j])
    if hidden.any():
        g = _hidden_geodesics(grid, i[hidden], j[hidden], radius / w if w > 0 else np.inf)
        d = d.copy()
        d[hidden] = np.where(np.isfinite(g), w * g + (1 - w) * d[hidden], UNREACHABLE)
    keep = d <= radius
    return i[keep], j[keep], d[keep]


def _hidden_geodesics(grid: Grid, I, J, cutoff):
    """Geodesic lengths for pairs whose segment is blocked (inf if above ``cutoff``)."""
    obs = grid.obstacle
    v = obs.nodes
    out = np.full(len(I), UNREACHABLE)
    if len(v) == 0:
        return out
    D = obs.node_distances
    tree = obs._node_tree
    x = grid.centers
    cells = np.unique(np.concatenate([I, J]))
    vis = {}
    for c in cells:  # nodes within range that each endpoint sees
        near = np.array(tree.query_ball_point(x[c], cutoff), dtype=int)
        if len(near) == 0:
            vis[c] = (near, np.zeros(0))
            continue
        near.sort()
        ok = ~obs.blocks(np.repeat(x[c][None], len(near), 0), v[near])
        near = near[ok]
        vis[c] = (near, np.hypot(*(v[near] - x[c]).T))
    for k, (a, b) in enumerate(zip(I, J)):
        na, da = vis[a]
        nb, db = vis[b]
        if len(na) == 0 or len(nb) == 0:
            continue
        best = np.min(da[:, None] + D[np.ix_(na, nb)] + db[None, :])
        if best <= cutoff:
            out[k] = best
    return out


# ---------------------------------------------------------------------------
# J-covering
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CoveringReport:
    covered_fraction: float
    rounds_used: int
    covered: np.ndarray


def check_j_covering(grid: Grid, kernel, metric: Metric, x0: int = 0, max_rounds: int = 10_000,
                     W=None) -> CoveringReport:
    """Iterate kernel supports from cell ``x0`` until the reached set stops growing."""
    if W is None:
        from .kernel import kernel_matrix
        W = kernel_matrix(grid, metric, kernel)
    W = W.tocsr()
    reached = np.zeros(grid.n, dtype=bool)
    reached[x0] = True
    frontier = np.array([x0])
    rounds = 0
    while len(frontier) and rounds < max_rounds:
        rounds += 1
        rows = W[frontier]
        nxt = np.unique(rows.indices[rows.data > 0])
        nxt = nxt[~reached[nxt]]
        reached[nxt] = True
        frontier = nxt
    return CoveringReport(float(reached.sum() / grid.n), rounds, reached)
