"""Node centralities, global structure indicators and repartition tables.

Path-based metrics run level-synchronous BFS / Brandes accumulation over
batches of source nodes using sparse matrix products, so the full network
stays tractable in pure Python.  Sums are accumulated in a fixed node order,
which keeps every result independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError
from .network import SimpleGraph, TriadNetwork

_BATCH = 512

RATIO_BINS = ("2", "3", "4", "5-9", "10+")
ALL_BIN = "all>1"


@dataclass(frozen=True)
class CentralityVector:
    values: dict[str, float]
    metric: str
    normalization: str

    def as_array(self, nodes: tuple[str, ...]) -> np.ndarray:
        return np.array([self.values[n] for n in nodes])


@dataclass(frozen=True)
class StructureReport:
    clustering: float
    closeness_centralization: float
    betweenness_centralization: float
    main_component_share: float
    average_path_length: float


@dataclass(frozen=True)
class BinStats:
    drawers: int
    pct_more_discounters: float
    pct_equal: float
    pct_fewer_discounters: float


@dataclass(frozen=True)
class RatioRepartition:
    bins: dict[str, BinStats]
    ratios: tuple[float, ...]
    mean_acceptors: float
    mean_discounters: float
    median_ratio: float


@dataclass(frozen=True)
class SharedPeerDistribution:
    role: str
    values: dict[str, float]
    histogram: dict[str, int]


# ---------------------------------------------------------------------------
# BFS kernels
# ---------------------------------------------------------------------------


def _adjacency(g: SimpleGraph) -> sp.csr_matrix:
    data = np.ones(len(g.indices), dtype=np.float64)
    return sp.csr_matrix((data, g.indices, g.indptr), shape=(g.n, g.n))


def _level_sets(A: sp.csr_matrix, n: int, sources: np.ndarray, sigma: np.ndarray | None):
    """Level-synchronous BFS for one source batch.

    Returns flat (row-major) cell indices per BFS level over the (n, b) grid;
    when ``sigma`` is given it is filled with geodesic path counts.
    """
    b = len(sources)
    flat0 = sources * b + np.arange(b)
    visited = np.zeros(n * b, dtype=bool)
    visited[flat0] = True
    buf = np.zeros((n, b), dtype=np.float64)
    levels = [flat0]
    if sigma is not None:
        sigma.ravel()[flat0] = 1.0
    while True:
        buf.ravel()[:] = 0.0
        idx = levels[-1]
        buf.ravel()[idx] = sigma.ravel()[idx] if sigma is not None else 1.0
        nxt = (A @ buf).ravel()
        new_idx = np.flatnonzero((nxt > 0) & ~visited)
        if not len(new_idx):
            return levels
        visited[new_idx] = True
        if sigma is not None:
            sigma.ravel()[new_idx] = nxt[new_idx]
        levels.append(new_idx)


def _distance_stats(g: SimpleGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per node: number of reachable peers and sum of geodesic distances."""
    n = g.n
    reach = np.zeros(n, dtype=np.int64)
    dist_sum = np.zeros(n, dtype=np.int64)
    if n == 0 or len(g.indices) == 0:
        return reach, dist_sum
    A = _adjacency(g)
    for start in range(0, n, _BATCH):
        sources = np.arange(start, min(start + _BATCH, n))
        b = len(sources)
        levels = _level_sets(A, n, sources, sigma=None)
        for depth, idx in enumerate(levels[1:], start=1):
            counts = np.bincount(idx % b, minlength=b)
            reach[sources] += counts
            dist_sum[sources] += depth * counts
    return reach, dist_sum


def _betweenness_raw(g: SimpleGraph) -> np.ndarray:
    """Brandes pair-dependency sums over all sources (undirected, unnormalized)."""
    n = g.n
    acc = np.zeros(n, dtype=np.float64)
    if n < 3 or len(g.indices) == 0:
        return acc
    A = _adjacency(g)
    for start in range(0, n, _BATCH):
        sources = np.arange(start, min(start + _BATCH, n))
        b = len(sources)
        sigma = np.zeros((n, b), dtype=np.float64)
        levels = _level_sets(A, n, sources, sigma=sigma)
        sigma_flat = sigma.ravel()
        delta = np.zeros(n * b, dtype=np.float64)
        buf = np.zeros((n, b), dtype=np.float64)
        for lev in range(len(levels) - 2, -1, -1):
            upper = levels[lev + 1]
            buf.ravel()[:] = 0.0
            buf.ravel()[upper] = (1.0 + delta[upper]) / sigma_flat[upper]
            spread = (A @ buf).ravel()
            here = levels[lev]
            delta[here] += sigma_flat[here] * spread[here]
        delta[levels[0]] = 0.0
        acc += delta.reshape(n, b).sum(axis=1)
    return acc


# ---------------------------------------------------------------------------
# Centralities
# ---------------------------------------------------------------------------


def closeness_all(g: SimpleGraph) -> CentralityVector:
    """Component-corrected closeness: (r/(n-1)) * (r/sum of distances)."""
    if g.n == 0:
        raise ValueError("empty graph")
    reach, dist_sum = _distance_stats(g)
    return _closeness_from_stats(g, reach, dist_sum)


def betweenness_all(g: SimpleGraph) -> CentralityVector:
    """Pair-dependency betweenness normalized by (n-1)(n-2)/2."""
    if g.n == 0:
        raise ValueError("empty graph")
    raw = _betweenness_raw(g)
    n = g.n
    scale = (n - 1) * (n - 2) if n >= 3 else 1.0
    values = {node: float(raw[i] / scale) for i, node in enumerate(g.nodes)}
    return CentralityVector(values=values, metric="betweenness", normalization="pairs")


def _component_labels(g: SimpleGraph) -> tuple[int, np.ndarray]:
    if g.n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    ncomp, labels = connected_components(_adjacency(g), directed=False)
    return ncomp, labels


def largest_component_nodes(g: SimpleGraph) -> np.ndarray:
    """Indices of the largest component; ties go to the smallest member index."""
    _, labels = _component_labels(g)
    sizes = np.bincount(labels)
    best = sizes.max()
    for i in range(g.n):  # first node whose component attains the max size
        if sizes[labels[i]] == best:
            return np.flatnonzero(labels == labels[i])
    return np.zeros(0, dtype=np.int64)


def eigenvector_all(g: SimpleGraph, tol: float = 1e-10, max_iter: int = 10_000) -> CentralityVector:
    """Principal eigenvector by power iteration on the largest component.

    Plain iteration oscillates on bipartite components, so the update uses
    A + I, which shares the principal eigenvector.
    """
    if len(g.indices) == 0:
        raise ValueError("eigenvector centrality needs at least one edge")
    comp = largest_component_nodes(g)
    A = _adjacency(g)[comp][:, comp]
    m = len(comp)
    x = np.full(m, 1.0 / np.sqrt(m))
    residual = np.inf
    for _ in range(max_iter):
        nxt = A @ x + x
        nxt /= np.linalg.norm(nxt)
        residual = float(np.abs(nxt - x).max())
        x = nxt
        if residual < tol:
            break
    else:
        raise ConvergenceError("power iteration did not converge", residual=residual)
    full = np.zeros(g.n)
    full[comp] = np.abs(x)
    full /= np.linalg.norm(full)
    values = {node: float(full[i]) for i, node in enumerate(g.nodes)}
    return CentralityVector(values=values, metric="eigenvector", normalization="unit-euclidean")


def global_clustering(g: SimpleGraph) -> float:
    """Transitivity: 3 * triangles / connected triples."""
    if g.n == 0 or len(g.indices) == 0:
        return 0.0
    A = _adjacency(g)
    closed = (A @ A).multiply(A).sum()  # 6 * triangles
    deg = g.degree_array().astype(np.int64)
    triples = int((deg * (deg - 1) // 2).sum())
    if triples == 0:
        return 0.0
    return float((closed / 2.0) / triples)


def centralization(v: CentralityVector) -> float:
    """Freeman centralization: sum(max - v_i) over its star-graph maximum."""
    if not v.values:
        raise ValueError("empty centrality vector")
    vals = np.array(list(v.values.values()), dtype=np.float64)
    n = len(vals)
    numerator = float((vals.max() - vals).sum())
    if numerator == 0.0:
        return 0.0
    if v.metric == "closeness":
        denom = (n - 1) * (n - 2) / (2 * n - 3) if n >= 3 else float(n - 1)
    elif v.metric == "betweenness":
        denom = float(n - 1)
    else:
        raise ValueError(f"no centralization normalization defined for metric {v.metric!r}")
    if denom <= 0:
        return 0.0
    return min(1.0, numerator / denom)


def average_path_length(g: SimpleGraph) -> float:
    """Mean geodesic distance over reachable ordered pairs."""
    reach, dist_sum = _distance_stats(g)
    pairs = int(reach.sum())
    return float(dist_sum.sum() / pairs) if pairs else 0.0


def main_component_share(g: SimpleGraph) -> float:
    if g.n == 0:
        raise ValueError("empty graph")
    reach, _ = _distance_stats(g)
    return 100.0 * (int(reach.max()) + 1 if g.n else 0) / g.n


def _closeness_from_stats(g: SimpleGraph, reach: np.ndarray, dist_sum: np.ndarray) -> CentralityVector:
    n = g.n
    values = {
        node: (int(reach[i]) / (n - 1)) * (int(reach[i]) / int(dist_sum[i]))
        if dist_sum[i] > 0 and n > 1
        else 0.0
        for i, node in enumerate(g.nodes)
    }
    return CentralityVector(values=values, metric="closeness", normalization="component-corrected")


def structure_report(g: SimpleGraph) -> StructureReport:
    """Global indicators; one BFS sweep serves closeness, paths and components."""
    _, report = full_metrics(g, with_eigenvector=False)
    return report


def full_metrics(
    g: SimpleGraph, with_eigenvector: bool = True
) -> tuple[dict[str, CentralityVector], StructureReport]:
    """Centrality vectors plus the structure report, sharing the BFS passes."""
    if g.n == 0:
        raise ValueError("empty graph")
    reach, dist_sum = _distance_stats(g)
    closeness = _closeness_from_stats(g, reach, dist_sum)
    betweenness = betweenness_all(g)
    vectors = {"closeness": closeness, "betweenness": betweenness}
    if with_eigenvector and len(g.indices):
        vectors["eigenvector"] = eigenvector_all(g)
    pairs = int(reach.sum())
    report = StructureReport(
        clustering=global_clustering(g),
        closeness_centralization=centralization(closeness),
        betweenness_centralization=centralization(betweenness),
        main_component_share=100.0 * (int(reach.max()) + 1) / g.n,
        average_path_length=float(dist_sum.sum() / pairs) if pairs else 0.0,
    )
    return vectors, report


# ---------------------------------------------------------------------------
# Acceptor-to-discounter ratios (repartition table)
# ---------------------------------------------------------------------------


def _bin_label(transactions: int) -> str:
    if transactions <= 4:
        return str(transactions)
    if transactions <= 9:
        return "5-9"
    return "10+"


def repartition_from_columns(drawers, acceptors, discounters) -> RatioRepartition:
    """Repartition over the multi-transaction drawers of aligned bill columns."""
    d_col = np.asarray(drawers)
    a_col = np.asarray(acceptors)
    x_col = np.asarray(discounters)
    if not (len(d_col) == len(a_col) == len(x_col)):
        raise ValueError("columns must be aligned")
    d_labels, d_inv = np.unique(d_col, return_inverse=True)
    a_inv = np.unique(a_col, return_inverse=True)[1]
    x_inv = np.unique(x_col, return_inverse=True)[1]
    n_d = len(d_labels)
    row_counts = np.bincount(d_inv, minlength=n_d)

    def distinct_per_drawer(other_inv: np.ndarray, n_other: int) -> np.ndarray:
        pairs = np.unique(d_inv.astype(np.int64) * n_other + other_inv)
        return np.bincount(pairs // n_other, minlength=n_d)

    acc = distinct_per_drawer(a_inv, int(a_inv.max()) + 1)
    dis = distinct_per_drawer(x_inv, int(x_inv.max()) + 1)

    multi = row_counts >= 2
    if not multi.any():
        raise ValueError("no multi-transaction drawers")
    a = acc[multi]
    d = dis[multi]
    t = row_counts[multi]
    ratios = a / d

    def stats(mask: np.ndarray) -> BinStats:
        total = int(mask.sum())
        if total == 0:
            return BinStats(0, 0.0, 0.0, 0.0)
        more = int((d[mask] > a[mask]).sum())
        equal = int((d[mask] == a[mask]).sum())
        fewer = total - more - equal
        return BinStats(
            drawers=total,
            pct_more_discounters=100.0 * more / total,
            pct_equal=100.0 * equal / total,
            pct_fewer_discounters=100.0 * fewer / total,
        )

    bins = {ALL_BIN: stats(np.ones(len(t), dtype=bool))}
    labels = np.array([_bin_label(int(x)) for x in t])
    for label in RATIO_BINS:
        bins[label] = stats(labels == label)

    sorted_ratios = np.sort(ratios)
    median = float(sorted_ratios[(len(sorted_ratios) - 1) // 2])
    return RatioRepartition(
        bins=bins,
        ratios=tuple(float(r) for r in ratios),
        mean_acceptors=float(a.mean()),
        mean_discounters=float(d.mean()),
        median_ratio=median,
    )


def ad_ratio_repartition(network: TriadNetwork) -> RatioRepartition:
    """Table of distinct acceptor/discounter counts per multi-transaction drawer."""
    counts = np.bincount(network.drawer_idx, minlength=len(network.nodes))
    keep = counts[network.drawer_idx] >= 2
    if not keep.any():
        raise ValueError("no multi-transaction drawers")
    return repartition_from_columns(
        network.drawer_idx[keep], network.acceptor_idx[keep], network.discounter_idx[keep]
    )


# ---------------------------------------------------------------------------
# Shared-peer distributions
# ---------------------------------------------------------------------------


def _decile_histogram(share_counts: np.ndarray, peers: int) -> dict[str, int]:
    hist = {"0": 0}
    for k in range(1, 11):
        hist[f"({10 * (k - 1)},{10 * k}]"] = 0
    for c in share_counts:
        if c == 0:
            hist["0"] += 1
        else:
            k = -(-10 * int(c) // peers)  # ceil(10 * c / peers), integer exact
            hist[f"({10 * (k - 1)},{10 * k}]"] += 1
    return hist


def shared_peer_values(actor_col, drawer_col) -> tuple[np.ndarray, np.ndarray]:
    """Per actor (sorted label order): count of fellow actors sharing a drawer."""
    a_labels, a_inv = np.unique(np.asarray(actor_col), return_inverse=True)
    d_labels, d_inv = np.unique(np.asarray(drawer_col), return_inverse=True)
    n_a, n_d = len(a_labels), len(d_labels)
    incidence = sp.csr_matrix(
        (np.ones(len(a_inv)), (a_inv, d_inv)), shape=(n_a, n_d), dtype=np.float64
    )
    incidence.data[:] = 1.0
    overlap = incidence @ incidence.T
    share_counts = overlap.getnnz(axis=1) - 1  # diagonal is always present
    return a_labels, share_counts.astype(np.int64)


def shared_peer_distribution(network: TriadNetwork, role: str) -> SharedPeerDistribution:
    """Percentage of fellow same-role actors sharing at least one drawer."""
    if role == "acceptor":
        actor_col = network.acceptor_idx
    elif role == "discounter":
        actor_col = network.discounter_idx
    else:
        raise ValueError(f"role must be acceptor or discounter, got {role!r}")
    labels_idx, share_counts = shared_peer_values(actor_col, network.drawer_idx)
    m = len(labels_idx)
    if m < 2:
        raise ValueError(f"need at least two {role}s")
    values = {
        network.nodes[int(labels_idx[i])]: 100.0 * int(share_counts[i]) / (m - 1)
        for i in range(m)
    }
    return SharedPeerDistribution(
        role=role, values=values, histogram=_decile_histogram(share_counts, m - 1)
    )


def shared_peer_distribution_from_columns(actor_col, drawer_col, role: str) -> SharedPeerDistribution:
    labels, share_counts = shared_peer_values(actor_col, drawer_col)
    m = len(labels)
    if m < 2:
        raise ValueError(f"need at least two {role}s")
    values = {str(labels[i]): 100.0 * int(share_counts[i]) / (m - 1) for i in range(m)}
    return SharedPeerDistribution(
        role=role, values=values, histogram=_decile_histogram(share_counts, m - 1)
    )


def write_centrality_csv(stream, closeness: CentralityVector, betweenness: CentralityVector,
                         eigenvector: CentralityVector):
    import csv

    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["node_id", "closeness", "betweenness", "eigenvector"])
    for node in sorted(closeness.values):
        w.writerow(
            [
                node,
                f"{closeness.values[node]:.10g}",
                f"{betweenness.values[node]:.10g}",
                f"{eigenvector.values[node]:.10g}",
            ]
        )
