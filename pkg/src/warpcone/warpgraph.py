"""Level-t cross-sections of a warped cone as weighted graphs.

A level graph carries two edge families over the nodes of a net:

* metric edges between nodes at geodesic distance <= rho/t, weighted by
  the scaled metric t*d; and
* wormhole edges of weight exactly 1 from each node x to the snapped
  image snap(s x), for every generator s of the symmetric set S.

Shortest paths in this graph realize the warped metric restricted to
the slice: a path alternates metric travel, paid at scale t, with unit
fares through group wormholes, which is the chain picture of the warped
distance.  Discretization error is never hidden: every graph records
its mesh and the worst snap error incurred by a wormhole endpoint.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse import csgraph as _csgraph

from .actions import GroupAction, Word, apply
from .errors import ConstructionError, DomainError, ResourceError
from .spaces import Net, nodes_within, pairs_within, snap_many, validate_points

ORACLE_CAP = 512
EXACT_DIAMETER_CAP = 4096
KIND_METRIC = 0
KIND_WORMHOLE = 1

_SNAP_CHUNK = 1_000_000
_ROW_CHUNK_BYTES = 256 * 1024 * 1024


@dataclass
class WarpedGraph:
    """The level-t slice of a warped cone, as a weighted graph."""

    net: Net
    action: GroupAction
    level: float
    rho: float
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_w: np.ndarray
    edge_kind: np.ndarray
    max_snap_error: float      # geodesic units
    snap_tolerance: float      # warped units: level * max_snap_error
    _adj: object = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.net)

    @property
    def n_edges(self) -> int:
        return len(self.edge_u)

    def adjacency(self) -> csr_matrix:
        """Symmetric CSR adjacency; built once, cached."""
        if self._adj is None:
            self._adj = _build_csr(self.n_nodes, self.edge_u, self.edge_v, self.edge_w)
        return self._adj

    def edge_table(self) -> dict:
        """(u, v) -> (weight, kind) with the cheapest edge per pair; metric
        wins weight ties so wormhole counts on paths are never inflated."""
        if self.n_edges > 4_000_000:
            raise ResourceError("edge table requested on a huge graph")
        table = {}
        for u, v, w, k in zip(self.edge_u.tolist(), self.edge_v.tolist(),
                              self.edge_w.tolist(), self.edge_kind.tolist()):
            key = (u, v) if u < v else (v, u)
            cur = table.get(key)
            if cur is None or (w, k) < cur:
                table[key] = (w, k)
        return table


def _build_csr(n, u, v, w):
    deg = np.bincount(u, minlength=n) + np.bincount(v, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    rows = np.concatenate([u, v])
    order = np.argsort(rows, kind="stable")
    del rows
    ne = len(u)
    indices = np.empty(2 * ne, dtype=np.int32)
    np.take(np.concatenate([v, u]), order, out=indices)
    np.subtract(order, ne, out=order, where=order >= ne)
    data = np.empty(2 * ne, dtype=np.float64)
    np.take(np.asarray(w, dtype=np.float64), order, out=data)
    del order
    if indptr[-1] <= np.iinfo(np.int32).max:
        indptr = indptr.astype(np.int32)
    return csr_matrix((data, indices, indptr), shape=(n, n))


def build_level_graph(net: Net, action: GroupAction, t: float,
                      rho: float | None = None) -> WarpedGraph:
    """Build the level-t warped graph over a net.

    rho is the metric-edge radius in warped units; it defaults to
    3*t*mesh and must be at least 2*t*mesh (else the metric layer of the
    graph cannot certify the covering).  Raises ConstructionError when
    the result is disconnected, naming the smallest component.
    """
    if t < 1.0:
        raise DomainError(f"level t must be >= 1, got {t}")
    if net.space.kind != action.space.kind:
        raise DomainError("net and action live on different spaces")
    mesh = net.mesh
    if rho is None:
        rho = 3.0 * t * mesh
    if rho < 2.0 * t * mesh:
        raise DomainError(f"rho={rho} below the connectivity margin 2*t*mesh={2 * t * mesh}")
    n = len(net)

    if rho > 0:
        mu, mv, md = pairs_within(net, rho / t)
        mw = t * md
    else:
        mu = mv = np.empty(0, np.int64)
        mw = np.empty(0)

    wu_parts, wv_parts = [], []
    max_err = 0.0
    points = net.points
    for letter in action.letters():
        moved = action.apply_letter(letter, points)
        for lo in range(0, n, _SNAP_CHUNK):
            hi = min(n, lo + _SNAP_CHUNK)
            ids, errs = snap_many(net, moved[lo:hi])
            if len(errs):
                max_err = max(max_err, float(errs.max()))
            src = np.arange(lo, hi, dtype=np.int64)
            keep = ids != src
            wu_parts.append(src[keep])
            wv_parts.append(ids[keep])
        del moved
    if wu_parts:
        wu = np.concatenate(wu_parts)
        wv = np.concatenate(wv_parts)
        del wu_parts, wv_parts
        lo = np.minimum(wu, wv)
        hi = np.maximum(wu, wv)
        key = lo * n + hi
        _, first = np.unique(key, return_index=True)
        wu, wv = lo[first], hi[first]
        del lo, hi, key, first
    else:
        wu = wv = np.empty(0, np.int64)

    nm, nw = len(mu), len(wu)
    edge_u = np.empty(nm + nw, dtype=np.int32)
    edge_v = np.empty(nm + nw, dtype=np.int32)
    edge_w = np.empty(nm + nw)
    edge_kind = np.empty(nm + nw, dtype=np.uint8)
    edge_u[:nm], edge_u[nm:] = mu, wu
    edge_v[:nm], edge_v[nm:] = mv, wv
    edge_w[:nm], edge_w[nm:] = mw, 1.0
    edge_kind[:nm], edge_kind[nm:] = KIND_METRIC, KIND_WORMHOLE
    del mu, mv, mw, wu, wv
    g = WarpedGraph(net=net, action=action, level=float(t), rho=float(rho),
                    edge_u=edge_u, edge_v=edge_v, edge_w=edge_w, edge_kind=edge_kind,
                    max_snap_error=max_err, snap_tolerance=float(t) * max_err)

    ncomp, labels = _csgraph.connected_components(g.adjacency(), directed=False)
    if ncomp > 1:
        sizes = np.bincount(labels)
        small = int(np.argmin(sizes))
        members = np.nonzero(labels == small)[0][:8]
        raise ConstructionError(
            f"level graph is disconnected ({ncomp} components); smallest has "
            f"{sizes[small]} nodes, e.g. {members.tolist()}")
    return g


def single_source(g: WarpedGraph, source: int, cutoff: float | None = None,
                  target: int | None = None, with_pred: bool = False):
    """Dijkstra from one node.

    Returns (dist, pred) arrays; unreached entries are inf / -1.  With a
    cutoff, exploration stops beyond it; with a target, it stops as soon
    as the target settles.
    """
    adj = g.adjacency()
    indptr, indices, data = adj.indptr, adj.indices, adj.data
    n = g.n_nodes
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64) if with_pred else None
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if target is not None and u == target:
            break
        s, e = indptr[u], indptr[u + 1]
        nbr = indices[s:e]
        nd = d + data[s:e]
        better = nd < dist[nbr]
        if cutoff is not None:
            better &= nd <= cutoff
        for v, dv in zip(nbr[better].tolist(), nd[better].tolist()):
            dist[v] = dv
            if with_pred:
                pred[v] = u
            heapq.heappush(heap, (dv, v))
    return dist, pred


def truncated_distances(g: WarpedGraph, source: int, cutoff: float) -> dict:
    """Dijkstra ball: {node: distance} for all nodes within `cutoff`.

    Dict-based, so the cost scales with the ball, not the graph; this is
    the workhorse for local statistics on large levels.
    """
    adj = g.adjacency()
    indptr, indices, data = adj.indptr, adj.indices, adj.data
    dist = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, np.inf):
            continue
        s, e = indptr[u], indptr[u + 1]
        for v, w in zip(indices[s:e].tolist(), data[s:e].tolist()):
            nd = d + w
            if nd <= cutoff and nd < dist.get(v, np.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def warped_distance(g: WarpedGraph, u: int, v: int) -> float:
    """Warped (shortest-path) distance between two nodes; symmetric,
    zero iff u == v, inf if unreachable."""
    if not (0 <= u < g.n_nodes and 0 <= v < g.n_nodes):
        raise DomainError("node id out of range")
    if u == v:
        return 0.0
    dist, _ = single_source(g, u, target=v)
    return float(dist[v])


def shortest_path(g: WarpedGraph, u: int, v: int):
    """One shortest path as (distance, node list)."""
    dist, pred = single_source(g, u, target=v, with_pred=True)
    if not np.isfinite(dist[v]):
        return float("inf"), []
    path = [v]
    while path[-1] != u:
        path.append(int(pred[path[-1]]))
    return float(dist[v]), path[::-1]


def path_wormhole_count(g: WarpedGraph, path: list[int]) -> int:
    """Number of wormhole fares along a node path (cheapest-edge kinds)."""
    table = g.edge_table()
    count = 0
    for a, b in zip(path, path[1:]):
        w, kind = table[(a, b) if a < b else (b, a)]
        count += int(kind == KIND_WORMHOLE)
    return count


def distances_from(g: WarpedGraph, sources, cutoff: float | None = None) -> np.ndarray:
    """Batch single-source distances (scipy engine), one row per source.

    Cross-checked against `single_source` in the test suite; used where
    many sources are needed at once.
    """
    src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    limit = np.inf if cutoff is None else float(cutoff)
    return _csgraph.dijkstra(g.adjacency(), directed=False, indices=src, limit=limit)


def _row_chunks(n_nodes: int) -> int:
    return max(1, _ROW_CHUNK_BYTES // (8 * n_nodes))


def all_pairs_oracle(g: WarpedGraph) -> np.ndarray:
    """Dense all-pairs shortest paths by Floyd-Warshall; test oracle only."""
    n = g.n_nodes
    if n > ORACLE_CAP:
        raise ResourceError(f"all-pairs oracle capped at {ORACLE_CAP} nodes, got {n}")
    W = np.full((n, n), np.inf)
    np.fill_diagonal(W, 0.0)
    u = g.edge_u.astype(np.int64)
    v = g.edge_v.astype(np.int64)
    np.minimum.at(W, (u, v), g.edge_w)
    np.minimum.at(W, (v, u), g.edge_w)
    for k in range(n):
        np.minimum(W, W[:, k, None] + W[None, k, :], out=W)
    return W


@dataclass(frozen=True)
class DiameterResult:
    value: float
    exact: bool  # False: double-sweep lower bound


def diameter(g: WarpedGraph) -> DiameterResult:
    """Graph diameter: exact below EXACT_DIAMETER_CAP nodes, else a
    double-sweep lower bound (flagged)."""
    n = g.n_nodes
    if n <= EXACT_DIAMETER_CAP:
        best = 0.0
        step = _row_chunks(n)
        for lo in range(0, n, step):
            rows = distances_from(g, np.arange(lo, min(n, lo + step)))
            best = max(best, float(rows.max()))
        return DiameterResult(best, True)
    d0 = distances_from(g, [0])[0]
    far = int(np.argmax(d0))
    d1 = distances_from(g, [far])[0]
    return DiameterResult(float(d1.max()), False)


def nk_neighborhood(g: WarpedGraph, node_set, k: float) -> np.ndarray:
    """One step of the compactness engine behind properness: the union of
    closed (scaled-metric) k-neighborhoods of the set and of its snapped
    translates under single generators."""
    if k < 0:
        raise DomainError("k must be >= 0")
    net = g.net
    action = g.action
    out: set[int] = set()
    ids = np.atleast_1d(np.asarray(list(node_set), dtype=np.int64))
    letters = [None] + action.letters()  # None = identity
    for y in ids:
        base = net.points[y]
        for letter in letters:
            if letter is None:
                pt = base
            else:
                moved = action.apply_letter(
                    letter, net.points[np.array([y])])
                pt = moved[0]
            sid, _ = snap_many(net, pt[None] if np.ndim(pt) else np.array([pt]))
            out.add(int(sid[0]))
            if k > 0:
                out.update(nodes_within(net, pt, k / g.level).tolist())
    return np.array(sorted(out), dtype=np.int64)


def warped_ball(g: WarpedGraph, center: int, r: float):
    """Node ids and distances of the closed warped r-ball around center."""
    dist = truncated_distances(g, center, r * (1 + 1e-12) + 1e-12)
    ids = np.array(sorted(dist), dtype=np.int64)
    d = np.array([dist[i] for i in ids.tolist()])
    keep = d <= r + 1e-9
    return ids[keep], d[keep]


def epsilon_capacity(g: WarpedGraph, center: int, r: float, eps: float) -> int:
    """Size of a greedy maximal eps-separated subset of the warped r-ball.

    Greedy order is (distance from center, node id), so the count is
    deterministic; a maximal separated set is at worst half the optimum.
    """
    if r <= 0 or eps <= 0:
        raise DomainError("r and eps must be positive")
    ids, dists = warped_ball(g, center, r)
    order = np.lexsort((ids, dists))
    blocked: set[int] = set()
    chosen = 0
    for i in order:
        node = int(ids[i])
        if node in blocked:
            continue
        chosen += 1
        near = truncated_distances(g, node, eps)
        blocked.update(v for v, dv in near.items() if dv < eps - 1e-12)
    return chosen


def word_displacement_table(g: WarpedGraph, words, sources,
                            slack: float = 1.0) -> np.ndarray:
    """d_Gamma(x, snap(w x)) for each word w (rows) and source x (columns).

    One truncated Dijkstra per source covers all words; entries farther
    than max word length + slack come back as inf.
    """
    src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    words = list(words)
    targets = np.empty((len(words), len(src)), dtype=np.int64)
    for i, w in enumerate(words):
        moved = apply(g.action, w, g.net.points[src])
        targets[i], _ = snap_many(g.net, validate_points(g.net.space, moved))
    cutoff = max((len(w) for w in words), default=0) + slack
    out = np.full((len(words), len(src)), np.inf)
    for j, s in enumerate(src.tolist()):
        ball = truncated_distances(g, s, cutoff)
        for i in range(len(words)):
            out[i, j] = ball.get(int(targets[i, j]), np.inf)
    return out
