"""Compact base spaces, finite nets, geodesic and nearest-node queries.

Supported spaces: the unit circle (angles in [0, 2*pi), circumference
2*pi), the unit 2-sphere (embedded unit vectors in R^3), the flat unit
2-torus (coordinates in [0,1)^2), and discrete finite sets (node ids,
all pairwise distances 1).

A net is a finite point family whose covering radius is at most the
requested mesh; distinct points stay at least mesh/2 apart.  Nets are
immutable and all queries are read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ResourceError

KINDS = ("circle", "sphere2", "torus2", "finite-set")

TWO_PI = 2.0 * math.pi
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

# Node count for a sphere net of covering radius h is ceil(SPHERE_DENSITY/h^2).
# Calibrated against measured covering radii of the Fibonacci layout with a
# safety margin; see test_spaces.py::test_sphere_net_covering.
SPHERE_DENSITY = 9.0

# Exact nearest-node scan below this size, cell-grid index above.
SCAN_LIMIT = 4096

DEFAULT_MAX_NODES = 8_000_000


@dataclass(frozen=True)
class SpaceSpec:
    """A compact base space: kind plus intrinsic parameters."""

    kind: str
    size: int = 0  # point count, finite-set only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown space kind {self.kind!r}")
        if self.kind == "finite-set" and self.size < 1:
            raise DomainError("finite-set space needs size >= 1")

    @property
    def diameter(self) -> float:
        if self.kind == "circle":
            return math.pi
        if self.kind == "sphere2":
            return math.pi
        if self.kind == "torus2":
            return math.sqrt(2.0) / 2.0
        return 1.0

    @property
    def point_dim(self) -> int:
        return {"circle": 1, "sphere2": 3, "torus2": 2, "finite-set": 1}[self.kind]


def validate_points(space: SpaceSpec, pts) -> np.ndarray:
    """Canonicalize a batch of points, raising DomainError on bad input.

    Returns an array whose first axis indexes points: shape (n,) for
    circle and finite-set, (n,2) for torus2, (n,3) for sphere2.
    """
    kind = space.kind
    if kind == "circle":
        a = np.atleast_1d(np.asarray(pts, dtype=float))
        if a.ndim != 1 or not np.all(np.isfinite(a)):
            raise DomainError("circle points are finite angles")
        return np.mod(a, TWO_PI)
    if kind == "torus2":
        a = np.asarray(pts, dtype=float)
        if a.ndim == 1:
            a = a[None, :]
        if a.ndim != 2 or a.shape[1] != 2 or not np.all(np.isfinite(a)):
            raise DomainError("torus2 points are pairs in the unit square")
        return np.mod(a, 1.0)
    if kind == "sphere2":
        a = np.asarray(pts, dtype=float)
        if a.ndim == 1:
            a = a[None, :]
        if a.ndim != 2 or a.shape[1] != 3 or not np.all(np.isfinite(a)):
            raise DomainError("sphere2 points are vectors in R^3")
        norms = np.linalg.norm(a, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise DomainError("sphere2 point is not a unit vector")
        return a / norms[:, None]
    a = np.atleast_1d(np.asarray(pts))
    if not np.issubdtype(a.dtype, np.integer):
        af = np.asarray(a, dtype=float)
        if np.any(af != np.round(af)):
            raise DomainError("finite-set points are integer node ids")
        a = af.astype(np.int64)
    if np.any(a < 0) or np.any(a >= space.size):
        raise DomainError("finite-set node id out of range")
    return a.astype(np.int64)


def geodesic(space: SpaceSpec, p, q) -> float:
    """Geodesic distance between two points of the space."""
    P = validate_points(space, p)
    Q = validate_points(space, q)
    return float(geodesic_many(space, P, Q)[0])


def geodesic_many(space: SpaceSpec, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Vectorized geodesic distance on pre-validated point batches."""
    kind = space.kind
    if kind == "circle":
        dd = np.abs(P - Q)
        return np.minimum(dd, TWO_PI - dd)
    if kind == "torus2":
        dd = np.abs(P - Q)
        dd = np.minimum(dd, 1.0 - dd)
        return np.hypot(dd[:, 0], dd[:, 1])
    if kind == "sphere2":
        # atan2 form: stable for nearly parallel and nearly antipodal pairs
        cr = np.cross(P, Q)
        return np.arctan2(np.linalg.norm(cr, axis=1), np.einsum("ij,ij->i", P, Q))
    return (P != Q).astype(float)


class _UniformGrid1D:
    """Nearest-node structure for the uniform circle net (the net is its own
    cell grid: candidate cells are the two enclosing grid nodes)."""

    def __init__(self, n: int):
        self.n = n
        self.step = TWO_PI / n

    def nearest(self, space, points, q):
        j0 = np.floor(q / self.step).astype(np.int64) % self.n
        j1 = (j0 + 1) % self.n
        d0 = geodesic_many(space, q, points[j0])
        d1 = geodesic_many(space, q, points[j1])
        lo = np.minimum(j0, j1)
        hi = np.maximum(j0, j1)
        dlo = np.where(lo == j0, d0, d1)
        dhi = np.where(lo == j0, d1, d0)
        take_hi = dhi < dlo  # ties go to the lower node index
        idx = np.where(take_hi, hi, lo)
        return idx, np.where(take_hi, dhi, dlo)


class _UniformGrid2D:
    """Nearest-node structure for the uniform torus net."""

    def __init__(self, n_side: int):
        self.n = n_side
        self.step = 1.0 / n_side

    def nearest(self, space, points, q):
        n = self.n
        i0 = np.floor(q[:, 0] / self.step).astype(np.int64) % n
        j0 = np.floor(q[:, 1] / self.step).astype(np.int64) % n
        best_d = np.full(len(q), np.inf)
        best_i = np.full(len(q), np.iinfo(np.int64).max)
        for di in (0, 1):
            for dj in (0, 1):
                idx = ((i0 + di) % n) * n + (j0 + dj) % n
                d = geodesic_many(space, q, points[idx])
                upd = (d < best_d) | ((d == best_d) & (idx < best_i))
                best_d = np.where(upd, d, best_d)
                best_i = np.where(upd, idx, best_i)
        return best_i, best_d


class _SphereCellGrid:
    """Voxel cell grid over the embedded sphere.

    The voxel edge must be at least the net's covering radius: then the
    nearest node of any on-sphere query lies in the 3x3x3 block around
    the query's voxel, so the block scan is exhaustive.
    """

    def __init__(self, points: np.ndarray, cell: float):
        self.points = points
        self.cell = cell
        self.B = int(math.ceil(2.0 / cell)) + 4
        coords = np.floor((points + 1.0) / cell).astype(np.int64) + 1
        keys = (coords[:, 0] * self.B + coords[:, 1]) * self.B + coords[:, 2]
        self.order = np.argsort(keys, kind="stable").astype(np.int64)
        sorted_keys = keys[self.order]
        self.cell_keys, starts = np.unique(sorted_keys, return_index=True)
        self.starts = starts.astype(np.int64)
        self.counts = np.diff(np.append(self.starts, len(sorted_keys))).astype(np.int64)
        self.max_count = int(self.counts.max())

    def _keys_of(self, q: np.ndarray) -> np.ndarray:
        c = np.floor((q + 1.0) / self.cell).astype(np.int64) + 1
        return (c[:, 0] * self.B + c[:, 1]) * self.B + c[:, 2]

    def nearest(self, space, points, q):
        m = len(q)
        qkey = self._keys_of(q)
        # process queries sorted by cell so bucket lookups and candidate
        # gathers are cache-local; un-permute at the end
        qorder = np.argsort(qkey, kind="stable")
        q = q[qorder]
        uq, inv = np.unique(qkey[qorder], return_inverse=True)
        best_d2 = np.full(m, np.inf)
        best_i = np.full(m, np.iinfo(np.int64).max)
        nc = len(self.cell_keys)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    off = (dx * self.B + dy) * self.B + dz
                    pos = np.searchsorted(self.cell_keys, uq + off)
                    okc = pos < nc
                    okc[okc] = self.cell_keys[pos[okc]] == (uq + off)[okc]
                    cc = np.where(okc, self.counts[np.minimum(pos, nc - 1)], 0)
                    sc = self.starts[np.minimum(pos, nc - 1)]
                    c = cc[inv]
                    s = sc[inv]
                    for k in range(int(cc.max()) if len(cc) else 0):
                        live = np.nonzero(c > k)[0]
                        if len(live) == 0:
                            break
                        cand = self.order[s[live] + k]
                        diff = q[live] - points[cand]
                        d2 = np.einsum("ij,ij->i", diff, diff)
                        upd = (d2 < best_d2[live]) | ((d2 == best_d2[live]) & (cand < best_i[live]))
                        ur = live[upd]
                        best_d2[ur] = d2[upd]
                        best_i[ur] = cand[upd]
        if np.any(~np.isfinite(best_d2)):
            # covering violated for these queries (should not happen); fall
            # back to the exact scan so the answer is still correct
            miss = np.nonzero(~np.isfinite(best_d2))[0]
            for i in miss:
                d = geodesic_many(SpaceSpec("sphere2"), np.broadcast_to(q[i], points.shape), points)
                j = int(np.argmin(d))
                best_i[i] = j
                best_d2[i] = np.sum((q[i] - points[j]) ** 2)
        d = geodesic_many(space, q, points[best_i])
        out_i = np.empty(m, dtype=np.int64)
        out_d = np.empty(m)
        out_i[qorder] = best_i
        out_d[qorder] = d
        return out_i, out_d


class _FiniteIndex:
    def nearest(self, space, points, q):
        return q.astype(np.int64), np.zeros(len(q))


@dataclass(frozen=True)
class Net:
    """A finite net of a compact space with a nearest-node index."""

    space: SpaceSpec
    points: np.ndarray
    mesh: float
    _index: object = field(repr=False)
    n_side: int = 0  # grid side for torus nets, node count for circle nets

    def __len__(self):
        return len(self.points)

    def coord_rows(self) -> np.ndarray:
        """Points as a 2-d float array (one row per node), for dumps."""
        p = self.points
        return np.asarray(p, dtype=float).reshape(len(p), -1)


def _sphere_points(n: int) -> np.ndarray:
    k = np.arange(n)
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = k * GOLDEN_ANGLE
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def make_net(space: SpaceSpec, mesh: float, seed: int = 0,
             max_nodes: int = DEFAULT_MAX_NODES) -> Net:
    """Build a net with covering radius <= mesh.

    Circle and torus nets are uniform grids; sphere nets use the
    deterministic Fibonacci spiral.  The layout ignores `seed` (all
    layouts are deterministic) but the argument is part of the contract:
    identical (space, mesh, seed) always yields the identical net.
    """
    kind = space.kind
    if kind == "finite-set":
        pts = np.arange(space.size, dtype=np.int64)
        return Net(space, pts, 0.0, _FiniteIndex(), n_side=space.size)
    if not (mesh > 0.0 and mesh < space.diameter):
        raise DomainError(f"mesh must lie in (0, {space.diameter}); got {mesh}")
    if kind == "circle":
        n = int(math.ceil(TWO_PI / mesh - 1e-9))
        if n > max_nodes:
            raise ResourceError(f"circle net needs {n} nodes (cap {max_nodes})")
        pts = np.arange(n) * (TWO_PI / n)
        return Net(space, pts, mesh, _UniformGrid1D(n), n_side=n)
    if kind == "torus2":
        n = int(math.ceil(1.0 / mesh - 1e-9))
        if n * n > max_nodes:
            raise ResourceError(f"torus net needs {n * n} nodes (cap {max_nodes})")
        ij = np.arange(n) / n
        pts = np.column_stack([np.repeat(ij, n), np.tile(ij, n)])
        return Net(space, pts, mesh, _UniformGrid2D(n), n_side=n)
    n = max(32, int(math.ceil(SPHERE_DENSITY / (mesh * mesh))))
    if n > max_nodes:
        raise ResourceError(f"sphere net needs {n} nodes (cap {max_nodes})")
    pts = _sphere_points(n)
    index = _SphereCellGrid(pts, mesh) if n >= SCAN_LIMIT else None
    return Net(space, pts, mesh, index)


def snap_scan(net: Net, q: np.ndarray):
    """Exact nearest-node scan (reference backend for the index)."""
    space = net.space
    if space.kind == "finite-set":
        return q.astype(np.int64), np.zeros(len(q))
    ids = np.empty(len(q), dtype=np.int64)
    errs = np.empty(len(q))
    pts = net.points
    for i in range(len(q)):
        qi = np.broadcast_to(q[i], pts.shape) if pts.ndim > 1 else np.full(len(pts), q[i])
        d = geodesic_many(space, qi, pts)
        j = int(np.argmin(d))  # argmin takes the lowest index on ties
        ids[i] = j
        errs[i] = d[j]
    return ids, errs


def snap_many(net: Net, pts) -> tuple[np.ndarray, np.ndarray]:
    """Nearest net node and geodesic error for a batch of points."""
    q = validate_points(net.space, pts)
    if net._index is None:
        if len(net) <= SCAN_LIMIT:
            return snap_scan(net, q)
        raise RuntimeError("net has no index")  # unreachable by construction
    return net._index.nearest(net.space, net.points, q)


def snap(net: Net, p) -> tuple[int, float]:
    """Nearest net node to p and the geodesic snap error.

    Ties break toward the lowest node index; the error never exceeds the
    net's mesh (covering).
    """
    ids, errs = snap_many(net, [p] if net.space.kind in ("circle", "finite-set") else p)
    return int(ids[0]), float(errs[0])


def nodes_within(net: Net, p, radius: float) -> np.ndarray:
    """Ids of net nodes within geodesic distance `radius` of point p."""
    q = validate_points(net.space, [p] if net.space.kind in ("circle", "finite-set") else p)
    pts = net.points
    if net.space.kind == "finite-set":
        if radius >= 1.0:
            return np.arange(len(net), dtype=np.int64)
        return q.astype(np.int64)
    qi = np.broadcast_to(q[0], pts.shape) if pts.ndim > 1 else np.full(len(pts), q[0])
    d = geodesic_many(net.space, qi, pts)
    return np.nonzero(d <= radius + 1e-12)[0].astype(np.int64)


def _ragged_cross(order, sA, cA, sB, cB):
    """All (a, b) index pairs between matched ragged buckets."""
    cnt = cA * cB
    total = int(cnt.sum())
    if total == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    rp = np.repeat(np.arange(len(cnt)), cnt)
    t = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    a = order[sA[rp] + t // cB[rp]]
    b = order[sB[rp] + t % cB[rp]]
    return a, b


def pairs_within(net: Net, radius: float):
    """All unordered node pairs with geodesic distance <= radius.

    Returns (u, v, dist) with u < v elementwise.  Uniform grids use their
    translation-invariant stencils; sphere nets a voxel sweep.
    """
    space = net.space
    n = len(net)
    if radius <= 0:
        z = np.empty(0, np.int64)
        return z, z.copy(), np.empty(0)
    if space.kind == "finite-set":
        if radius < 1.0:
            z = np.empty(0, np.int64)
            return z, z.copy(), np.empty(0)
        u, v = np.triu_indices(n, k=1)
        return u.astype(np.int64), v.astype(np.int64), np.ones(len(u))
    if space.kind == "circle":
        step = TWO_PI / net.n_side
        m = min(int(np.floor(radius / step + 1e-9)), n // 2)
        us, vs, ds = [], [], []
        base = np.arange(n, dtype=np.int64)
        for k in range(1, m + 1):
            j = (base + k) % n
            if 2 * k == n:
                keep = base < j
                a, b = base[keep], j[keep]
            else:
                a, b = np.minimum(base, j), np.maximum(base, j)
            us.append(a)
            vs.append(b)
            ds.append(np.full(len(a), min(k * step, TWO_PI - k * step)))
        if not us:
            z = np.empty(0, np.int64)
            return z, z.copy(), np.empty(0)
        return np.concatenate(us), np.concatenate(vs), np.concatenate(ds)
    if space.kind == "torus2":
        ns = net.n_side
        step = 1.0 / ns
        m = int(np.floor(radius / step + 1e-9))
        if 2 * m + 1 >= ns:
            return _pairs_dense(net, radius)
        base = np.arange(n, dtype=np.int64)
        bi, bj = base // ns, base % ns
        us, vs, ds = [], [], []
        for di in range(0, m + 1):
            for dj in range(-m, m + 1):
                if di == 0 and dj <= 0:
                    continue
                d = math.hypot(min(di, ns - di) * step, min(abs(dj), ns - abs(dj)) * step)
                if d > radius + 1e-12:
                    continue
                j2 = ((bi + di) % ns) * ns + (bj + dj) % ns
                a, b = np.minimum(base, j2), np.maximum(base, j2)
                us.append(a)
                vs.append(b)
                ds.append(np.full(n, d))
        if not us:
            z = np.empty(0, np.int64)
            return z, z.copy(), np.empty(0)
        u = np.concatenate(us)
        v = np.concatenate(vs)
        d = np.concatenate(ds)
        key = u * n + v
        _, first = np.unique(key, return_index=True)
        return u[first], v[first], d[first]
    return _sphere_pairs(net, radius)


def _pairs_dense(net: Net, radius: float):
    """Quadratic pair scan, for small nets and as a cross-check oracle."""
    n = len(net)
    if n > SCAN_LIMIT:
        raise ResourceError(f"dense pair scan on {n} nodes")
    u, v = np.triu_indices(n, k=1)
    d = geodesic_many(net.space, net.points[u], net.points[v])
    keep = d <= radius + 1e-12
    return u[keep].astype(np.int64), v[keep].astype(np.int64), d[keep]


def _sphere_pairs(net: Net, radius: float):
    if len(net) <= SCAN_LIMIT:
        return _pairs_dense(net, radius)
    pts = net.points
    chord = 2.0 * math.sin(min(radius, math.pi) / 2.0)
    chord2 = chord * chord * (1.0 + 1e-12) + 1e-15
    grid = _SphereCellGrid(pts, chord * (1.0 + 1e-9))
    offsets = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                if (dx, dy, dz) > (0, 0, 0):
                    offsets.append((dx * grid.B + dy) * grid.B + dz)
    keys, starts, counts, order = grid.cell_keys, grid.starts, grid.counts, grid.order
    us, vs, ds = [], [], []

    def _filtered(a, b):
        diff = pts[a] - pts[b]
        d2 = np.einsum("ij,ij->i", diff, diff)
        keep = d2 <= chord2
        if np.any(keep):
            a, b = a[keep], b[keep]
            # geodesic from the chord: exact for points on the unit sphere
            # and stable at these radii (matches the atan2 form to ~1e-16)
            us.append(np.minimum(a, b).astype(np.int32))
            vs.append(np.maximum(a, b).astype(np.int32))
            ds.append(2.0 * np.arcsin(np.minimum(1.0, 0.5 * np.sqrt(d2[keep]))))

    a, b = _ragged_cross(order, starts, counts, starts, counts)
    keep = a < b
    _filtered(a[keep], b[keep])
    for off in offsets:
        pos = np.searchsorted(keys, keys + off)
        ok = pos < len(keys)
        ok[ok] = keys[pos[ok]] == (keys + off)[np.nonzero(ok)[0]]
        rows = np.nonzero(ok)[0]
        if len(rows) == 0:
            continue
        a, b = _ragged_cross(order, starts[rows], counts[rows],
                             starts[pos[rows]], counts[pos[rows]])
        _filtered(a, b)
    u = np.concatenate(us).astype(np.int64)
    v = np.concatenate(vs).astype(np.int64)
    d = np.concatenate(ds)
    keep = d <= radius + 1e-12
    return u[keep], v[keep], d[keep]


def covering_radius_estimate(net: Net, n_samples: int = 10_000, seed: int = 0) -> float:
    """Monte-Carlo estimate of the covering radius (max snap error)."""
    rng = np.random.default_rng(seed)
    kind = net.space.kind
    if kind == "finite-set":
        return 0.0
    if kind == "circle":
        q = rng.uniform(0.0, TWO_PI, n_samples)
    elif kind == "torus2":
        q = rng.uniform(0.0, 1.0, (n_samples, 2))
    else:
        q = rng.normal(size=(n_samples, 3))
        q /= np.linalg.norm(q, axis=1)[:, None]
    _, errs = snap_many(net, q)
    return float(errs.max())


def min_separation(net: Net) -> float:
    """Smallest pairwise distance between distinct net nodes."""
    if net.space.kind == "finite-set":
        return 1.0
    u, v, d = pairs_within(net, 4.0 * max(net.mesh, 1e-12))
    if len(d) == 0:
        return float("inf")
    return float(d.min())
