"""Compound-relation triad network built from bills.

Each bill contributes one drawer->acceptor (DA) and one acceptor->discounter
(AD) directed occurrence.  Degree queries run on that directed multigraph;
path-based metrics use the undirected simple projection, where multiplicity
and direction are dropped and self-pairs are skipped.  The drawer-discounter
relation is never stored as an edge: it is derived on demand through the
shared acceptor.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .ledger import AgentRecord, LedgerDataset


@dataclass(frozen=True)
class Demography:
    total_nodes: int
    drawers: int
    acceptors: int
    discounters: int
    multi_role: int


class SimpleGraph:
    """Undirected simple graph over string-labelled nodes, stored as CSR."""

    def __init__(self, nodes: tuple[str, ...], indptr: np.ndarray, indices: np.ndarray):
        self.nodes = nodes
        self.index = {n: i for i, n in enumerate(nodes)}
        self.indptr = indptr
        self.indices = indices

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degree_array(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edge_set(self) -> set[tuple[int, int]]:
        out = set()
        for i in range(self.n):
            for j in self.neighbors(i):
                if i < j:
                    out.add((i, int(j)))
        return out

    def __eq__(self, other):
        if not isinstance(other, SimpleGraph):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):  # identity hashing; graphs are mutated never
        return id(self)

    @staticmethod
    def from_edges(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> "SimpleGraph":
        """Build from node labels and (possibly duplicated) undirected pairs."""
        node_tuple = tuple(sorted(set(nodes)))
        index = {n: i for i, n in enumerate(node_tuple)}
        pairs = set()
        for u, v in edges:
            iu, iv = index[u], index[v]
            if iu == iv:
                continue
            pairs.add((min(iu, iv), max(iu, iv)))
        return SimpleGraph(node_tuple, *_csr_from_pairs(len(node_tuple), pairs))


def _csr_from_pairs(n: int, pairs: set[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    if not pairs:
        return np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    arr = np.array(sorted(pairs), dtype=np.int64)
    src = np.concatenate([arr[:, 0], arr[:, 1]])
    dst = np.concatenate([arr[:, 1], arr[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, dst


class TriadNetwork:
    """Immutable network of drawers, acceptors and discounters.

    Nodes are ordered by agent_id so every derived iteration is reproducible.
    """

    def __init__(self, dataset: LedgerDataset):
        if not dataset.bills:
            raise ValueError("cannot build a network from an empty dataset")
        agents = dataset.agent_map()
        used = set()
        for b in dataset.bills:
            used.update((b.drawer_id, b.acceptor_id, b.discounter_id))
        self.nodes: tuple[str, ...] = tuple(sorted(used))
        self.index: dict[str, int] = {n: i for i, n in enumerate(self.nodes)}
        self.agents: dict[str, AgentRecord] = {n: agents[n] for n in self.nodes}
        self.taxonomy = dataset.taxonomy

        n_bills = len(dataset.bills)
        self.bill_ids: tuple[str, ...] = tuple(b.bill_id for b in dataset.bills)
        self.drawer_idx = np.fromiter((self.index[b.drawer_id] for b in dataset.bills), np.int64, n_bills)
        self.acceptor_idx = np.fromiter((self.index[b.acceptor_id] for b in dataset.bills), np.int64, n_bills)
        self.discounter_idx = np.fromiter(
            (self.index[b.discounter_id] for b in dataset.bills), np.int64, n_bills
        )

        self.is_drawer = np.zeros(len(self.nodes), dtype=bool)
        self.is_acceptor = np.zeros(len(self.nodes), dtype=bool)
        self.is_discounter = np.zeros(len(self.nodes), dtype=bool)
        self.is_drawer[self.drawer_idx] = True
        self.is_acceptor[self.acceptor_idx] = True
        self.is_discounter[self.discounter_idx] = True

        self._da_weights: dict[tuple[int, int], int] = {}
        self._ad_weights: dict[tuple[int, int], int] = {}
        self._edge_bills: dict[tuple[str, int, int], list[str]] = {}
        for b, (d, a, x) in enumerate(zip(self.drawer_idx, self.acceptor_idx, self.discounter_idx)):
            da, ad = (int(d), int(a)), (int(a), int(x))
            self._da_weights[da] = self._da_weights.get(da, 0) + 1
            self._ad_weights[ad] = self._ad_weights.get(ad, 0) + 1
            self._edge_bills.setdefault(("DA", *da), []).append(self.bill_ids[b])
            self._edge_bills.setdefault(("AD", *ad), []).append(self.bill_ids[b])
        self._projection: SimpleGraph | None = None

    # -- basic views -------------------------------------------------------

    @property
    def n_bills(self) -> int:
        return len(self.bill_ids)

    def da_edges(self) -> dict[tuple[int, int], int]:
        return dict(self._da_weights)

    def ad_edges(self) -> dict[tuple[int, int], int]:
        return dict(self._ad_weights)

    def bills_for_edge(self, kind: str, src: str, dst: str) -> tuple[str, ...]:
        key = (kind, self.index[src], self.index[dst])
        return tuple(self._edge_bills.get(key, ()))

    def role_nodes(self, role: str) -> tuple[str, ...]:
        flags = {"drawer": self.is_drawer, "acceptor": self.is_acceptor, "discounter": self.is_discounter}
        try:
            mask = flags[role]
        except KeyError:
            raise ValueError(f"unknown role {role!r}") from None
        return tuple(self.nodes[i] for i in np.flatnonzero(mask))

    def bills_per_drawer(self) -> dict[str, int]:
        counts = np.bincount(self.drawer_idx, minlength=len(self.nodes))
        return {self.nodes[i]: int(counts[i]) for i in np.flatnonzero(counts)}


def build_network(dataset: LedgerDataset) -> TriadNetwork:
    return TriadNetwork(dataset)


def demography(network: TriadNetwork) -> Demography:
    roles = (
        network.is_drawer.astype(np.int64)
        + network.is_acceptor.astype(np.int64)
        + network.is_discounter.astype(np.int64)
    )
    return Demography(
        total_nodes=len(network.nodes),
        drawers=int(network.is_drawer.sum()),
        acceptors=int(network.is_acceptor.sum()),
        discounters=int(network.is_discounter.sum()),
        multi_role=int((roles >= 2).sum()),
    )


def degree(
    network: TriadNetwork,
    node: str,
    direction: str = "all",
    weighting: str = "binary",
    kind: str | None = None,
) -> int:
    """Directed-multigraph degree of ``node``.

    ``direction``: in (received DA/AD occurrences), out (sent), or all.
    ``weighting``: transaction counts bill occurrences, binary counts
    distinct partners per edge kind.  ``kind`` optionally restricts to DA
    or AD edges.
    """
    if node not in network.index:
        raise KeyError(node)
    if direction not in ("in", "out", "all"):
        raise ValueError(f"bad direction {direction!r}")
    if weighting not in ("binary", "transaction"):
        raise ValueError(f"bad weighting {weighting!r}")
    if kind not in (None, "DA", "AD"):
        raise ValueError(f"bad kind {kind!r}")
    i = network.index[node]

    def tally(edges: dict[tuple[int, int], int], position: int) -> int:
        if weighting == "transaction":
            return sum(w for key, w in edges.items() if key[position] == i)
        return sum(1 for key in edges if key[position] == i)

    total = 0
    if direction in ("in", "all"):
        if kind in (None, "DA"):
            total += tally(network._da_weights, 1)
        if kind in (None, "AD"):
            total += tally(network._ad_weights, 1)
    if direction in ("out", "all"):
        if kind in (None, "DA"):
            total += tally(network._da_weights, 0)
        if kind in (None, "AD"):
            total += tally(network._ad_weights, 0)
    return total


def multi_transaction_drawers(network: TriadNetwork) -> tuple[str, ...]:
    """Drawers appearing on at least two bill records, in agent_id order."""
    counts = np.bincount(network.drawer_idx, minlength=len(network.nodes))
    return tuple(network.nodes[i] for i in np.flatnonzero(counts >= 2))


def undirected_projection(network: TriadNetwork) -> SimpleGraph:
    """Deduplicated, unweighted, self-loop-free view of both edge kinds."""
    if network._projection is None:
        pairs = set()
        for (u, v) in list(network._da_weights) + list(network._ad_weights):
            if u != v:
                pairs.add((min(u, v), max(u, v)))
        indptr, indices = _csr_from_pairs(len(network.nodes), pairs)
        network._projection = SimpleGraph(network.nodes, indptr, indices)
    return network._projection


def export_edges(network: TriadNetwork, stream: IO[str]):
    """Edge list CSV: kind,src_id,dst_id,weight (deterministic row order)."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["kind", "src_id", "dst_id", "weight"])
    for kind, edges in (("DA", network._da_weights), ("AD", network._ad_weights)):
        rows = sorted((network.nodes[u], network.nodes[v], wt) for (u, v), wt in edges.items())
        for u, v, wt in rows:
            w.writerow([kind, u, v, wt])
