"""Spectral diagnostics on warped graphs.

The unit-scale graph connects node pairs at warped distance <= 1 + tol;
its normalized Laplacian's smallest nonzero eigenvalue and a Fiedler
sweep cut give the empirical amenable-vs-free contrast.  These are
diagnostics of the artifact, not statements proved about warped cones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse import csgraph as _csgraph

from .errors import ConstructionError, ConvergenceError, DomainError
from .warpgraph import WarpedGraph, _row_chunks, distances_from

DENSE_EIG_CAP = 1024


@dataclass
class UnitScaleGraph:
    """Unweighted graph of warped-unit-scale adjacency."""

    n_nodes: int
    adj: csr_matrix
    degrees: np.ndarray
    tol: float

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max())

    @property
    def n_edges(self) -> int:
        return int(self.adj.nnz // 2)


def unit_graph(g: WarpedGraph, tol: float = 0.1) -> UnitScaleGraph:
    """Connect node pairs with warped distance <= 1 + tol."""
    if not 0.0 <= tol <= 0.5:
        raise DomainError("tol must lie in [0, 0.5]")
    n = g.n_nodes
    cutoff = 1.0 + tol
    rows_u, rows_v = [], []
    step = _row_chunks(n)
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        block = distances_from(g, np.arange(lo, hi), cutoff=cutoff)
        bi, bj = np.nonzero(block <= cutoff)
        bi += lo
        keep = bi < bj  # dedupe through symmetry, drop self
        rows_u.append(bi[keep].astype(np.int32))
        rows_v.append(bj[keep].astype(np.int32))
    u = np.concatenate(rows_u)
    v = np.concatenate(rows_v)
    data = np.ones(2 * len(u))
    adj = csr_matrix((data, (np.concatenate([u, v]), np.concatenate([v, u]))),
                     shape=(n, n))
    adj.sum_duplicates()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    ncomp, labels = _csgraph.connected_components(adj, directed=False)
    if ncomp > 1:
        sizes = np.bincount(labels).tolist()
        raise ConstructionError(f"unit-scale graph disconnected; component sizes {sizes}")
    return UnitScaleGraph(n_nodes=n, adj=adj, degrees=deg, tol=tol)


def normalized_laplacian_dense(ug: UnitScaleGraph) -> np.ndarray:
    A = ug.adj.toarray()
    inv_sqrt = 1.0 / np.sqrt(ug.degrees)
    return np.eye(ug.n_nodes) - (A * inv_sqrt[None, :]) * inv_sqrt[:, None]


def _lap_matvec(ug: UnitScaleGraph):
    inv_sqrt = 1.0 / np.sqrt(ug.degrees)

    def mv(x):
        return x - inv_sqrt * (ug.adj @ (inv_sqrt * x))

    return mv


def _start_vector(n: int) -> np.ndarray:
    # deterministic node-index cosine profile
    return np.cos(np.pi * (2.0 * np.arange(n) + 1.0) / (2.0 * n))


_NULL_SHIFT = 2.5  # above the normalized-Laplacian spectral max of 2


def _lanczos_smallest(ug: UnitScaleGraph, tol: float, max_restarts: int = 80):
    """Smallest nonkernel eigenpair of the normalized Laplacian.

    Restarted Lanczos with full reorthogonalization on the rank-one
    shifted operator L + 2.5 * v v^T, where v spans the kernel: the shift
    moves the kernel eigenvalue above the whole spectrum, so the smallest
    eigenvalue of the shifted operator is lambda_1 and the kernel cannot
    contaminate the iteration.
    """
    n = ug.n_nodes
    mv = _lap_matvec(ug)
    null = np.sqrt(ug.degrees)
    null /= np.linalg.norm(null)

    def mv_shifted(x):
        return mv(x) + _NULL_SHIFT * null * (null @ x)

    q = _start_vector(n)
    q -= null * (null @ q)
    nq = np.linalg.norm(q)
    if nq < 1e-12:
        q = np.zeros(n)
        q[0] = 1.0
        nq = np.linalg.norm(q)
    q /= nq
    m_max = min(n - 1, 48)
    residual = np.inf
    for _ in range(max_restarts):
        basis = [q]
        alphas, betas = [], []
        for j in range(m_max):
            w = mv_shifted(basis[j])
            a = basis[j] @ w
            alphas.append(a)
            w -= a * basis[j]
            if j > 0:
                w -= betas[-1] * basis[j - 1]
            for b in basis:  # full reorthogonalization
                w -= b * (b @ w)
            nb = np.linalg.norm(w)
            if nb < 1e-14:
                break
            betas.append(nb)
            basis.append(w / nb)
        k = len(alphas)
        T = np.diag(alphas)
        if k > 1:
            off = np.array(betas[:k - 1])
            T += np.diag(off, 1) + np.diag(off, -1)
        vals, vecs = np.linalg.eigh(T)
        theta = float(vals[0])
        y = np.column_stack(basis[:k]) @ vecs[:, 0]
        y /= np.linalg.norm(y)
        r = mv_shifted(y) - theta * y
        residual = float(np.linalg.norm(r))
        if residual <= tol:
            return theta, y
        q = y
    raise ConvergenceError("lambda1 Lanczos failed to converge", residual)


def lambda1(ug: UnitScaleGraph, tol: float = 1e-8) -> float:
    """Second-smallest eigenvalue of the normalized Laplacian."""
    if ug.n_nodes < 2:
        raise DomainError("lambda1 needs at least two nodes")
    val, _ = _lanczos_smallest(ug, tol)
    return val


@dataclass
class CheegerResult:
    conductance: float
    cut: np.ndarray = field(repr=False)


def cheeger_sweep(ug: UnitScaleGraph) -> CheegerResult:
    """Best conductance over the Fiedler sweep (prefix cuts of the
    degree-rescaled eigenvector ordering)."""
    n = ug.n_nodes
    if n < 2:
        raise DomainError("sweep needs at least two nodes")
    if n <= DENSE_EIG_CAP:
        L = normalized_laplacian_dense(ug)
        vals, vecs = np.linalg.eigh(L)
        y = vecs[:, 1]
    else:
        _, y = _lanczos_smallest(ug, 1e-8)
    u = y / np.sqrt(ug.degrees)
    order = np.argsort(u, kind="stable")
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    coo = ug.adj.tocoo()
    mask = coo.row < coo.col
    lo = np.minimum(rank[coo.row[mask]], rank[coo.col[mask]])
    hi = np.maximum(rank[coo.row[mask]], rank[coo.col[mask]])
    events = np.zeros(n + 1)
    np.add.at(events, lo + 1, 1.0)
    np.add.at(events, hi + 1, -1.0)
    cut_sizes = np.cumsum(events)[1:n]  # cuts after k=1..n-1 prefix nodes
    vol = np.cumsum(ug.degrees[order])[: n - 1]
    total = float(ug.degrees.sum())
    denom = np.minimum(vol, total - vol)
    cond = cut_sizes / denom
    k = int(np.argmin(cond))
    return CheegerResult(conductance=float(cond[k]), cut=np.sort(order[: k + 1]))


def spectra_row(g: WarpedGraph, unit_tol: float = 0.1, eig_tol: float = 1e-8) -> dict:
    """One spectral report row for a level graph."""
    ug = unit_graph(g, unit_tol)
    lam = lambda1(ug, eig_tol)
    ch = cheeger_sweep(ug)
    return {
        "t": g.level,
        "n_nodes": g.n_nodes,
        "lambda1": lam,
        "cheeger": ch.conductance,
        "max_degree": ug.max_degree,
    }
