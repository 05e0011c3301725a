"""Randomized null models over the multi-transaction transaction table.

Two schemes, both leaving the drawer column untouched:

* uniform: rebuild the acceptor and discounter columns from scratch, giving
  every actor the same expected number of rows.  Each universe actor is
  repeated ceil(L / n) times, the long column is shuffled, and the first L
  entries are kept.
* degree preserving: independently permute the observed acceptor and
  discounter columns, so every actor keeps its exact transaction count.

Ensemble replicates derive their seeds from (master_seed, index) via SHA-256,
so runs are reproducible and replicates are independent of execution order.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .metrics import (
    RatioRepartition,
    SharedPeerDistribution,
    StructureReport,
    repartition_from_columns,
    shared_peer_distribution_from_columns,
    structure_report,
)
from .network import SimpleGraph, TriadNetwork, multi_transaction_drawers

VARIANTS = ("uniform", "degree")
METRIC_CHOICES = ("repartition", "shared_peers", "structure")


@dataclass(frozen=True)
class TransactionTable:
    """Aligned drawer/acceptor/discounter columns, one row per bill.

    Restricted to multi-transaction drawers.  ``acceptor_universe`` and
    ``discounter_universe`` are the actor pools the uniform model draws
    from; by default the distinct actors of each column.
    """

    drawers: tuple[str, ...]
    acceptors: tuple[str, ...]
    discounters: tuple[str, ...]
    acceptor_universe: tuple[str, ...]
    discounter_universe: tuple[str, ...]

    @property
    def n_rows(self) -> int:
        return len(self.drawers)

    @staticmethod
    def build(
        drawers,
        acceptors,
        discounters,
        acceptor_universe=None,
        discounter_universe=None,
    ) -> "TransactionTable":
        drawers = tuple(drawers)
        acceptors = tuple(acceptors)
        discounters = tuple(discounters)
        if not (len(drawers) == len(acceptors) == len(discounters)):
            raise ValueError("columns must be aligned")
        if not drawers:
            raise ValueError("transaction table has no rows")
        counts: dict[str, int] = {}
        for d in drawers:
            counts[d] = counts.get(d, 0) + 1
        singles = sorted(d for d, c in counts.items() if c < 2)
        if singles:
            raise ValueError(f"drawers with fewer than two rows: {singles[:5]}")
        return TransactionTable(
            drawers=drawers,
            acceptors=acceptors,
            discounters=discounters,
            acceptor_universe=tuple(acceptor_universe)
            if acceptor_universe is not None
            else tuple(sorted(set(acceptors))),
            discounter_universe=tuple(discounter_universe)
            if discounter_universe is not None
            else tuple(sorted(set(discounters))),
        )

    def drawer_row_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for d in self.drawers:
            out[d] = out.get(d, 0) + 1
        return out

    def digest(self) -> str:
        h = hashlib.sha256()
        for col in (self.drawers, self.acceptors, self.discounters):
            h.update("\x1f".join(col).encode())
            h.update(b"\x1e")
        return h.hexdigest()


def make_table(network: TriadNetwork, multi_transaction_universe: bool = False) -> TransactionTable:
    """Rows of multi-transaction drawers, in bill order.

    With ``multi_transaction_universe`` the uniform model's actor pools are
    narrowed to acceptors/discounters appearing on at least two of those
    rows (the stricter framing); the rows themselves are unchanged.
    """
    multi = set(multi_transaction_drawers(network))
    if not multi:
        raise ValueError("network has no multi-transaction drawers")
    rows = [
        (network.nodes[d], network.nodes[a], network.nodes[x])
        for d, a, x in zip(network.drawer_idx, network.acceptor_idx, network.discounter_idx)
        if network.nodes[d] in multi
    ]
    drawers, acceptors, discounters = (tuple(col) for col in zip(*rows))
    acc_universe = dis_universe = None
    if multi_transaction_universe:
        acc_counts: dict[str, int] = {}
        dis_counts: dict[str, int] = {}
        for a in acceptors:
            acc_counts[a] = acc_counts.get(a, 0) + 1
        for x in discounters:
            dis_counts[x] = dis_counts.get(x, 0) + 1
        acc_universe = tuple(sorted(a for a, c in acc_counts.items() if c >= 2))
        dis_universe = tuple(sorted(x for x, c in dis_counts.items() if c >= 2))
        if not acc_universe or not dis_universe:
            raise ValueError("multi-transaction universe is empty")
    return TransactionTable.build(drawers, acceptors, discounters, acc_universe, dis_universe)


def _uniform_column(universe: tuple[str, ...], n_rows: int, rng: np.random.Generator) -> tuple[str, ...]:
    repeats = math.ceil(n_rows / len(universe))
    column = np.repeat(np.arange(len(universe)), repeats)
    rng.shuffle(column)
    labels = np.asarray(universe, dtype=object)
    return tuple(labels[column[:n_rows]])


def simulate_uniform(table: TransactionTable, seed: int) -> TransactionTable:
    """Simulation 1: same-likelihood column rebuild (drawer column fixed)."""
    if not table.acceptor_universe or not table.discounter_universe:
        raise ValueError("empty actor universe")
    rng = np.random.default_rng(seed)
    return TransactionTable(
        drawers=table.drawers,
        acceptors=_uniform_column(table.acceptor_universe, table.n_rows, rng),
        discounters=_uniform_column(table.discounter_universe, table.n_rows, rng),
        acceptor_universe=table.acceptor_universe,
        discounter_universe=table.discounter_universe,
    )


def simulate_degree_preserving(table: TransactionTable, seed: int) -> TransactionTable:
    """Simulation 2: independent permutations of the observed columns."""
    rng = np.random.default_rng(seed)
    acc = np.asarray(table.acceptors, dtype=object)
    dis = np.asarray(table.discounters, dtype=object)
    return TransactionTable(
        drawers=table.drawers,
        acceptors=tuple(acc[rng.permutation(table.n_rows)]),
        discounters=tuple(dis[rng.permutation(table.n_rows)]),
        acceptor_universe=table.acceptor_universe,
        discounter_universe=table.discounter_universe,
    )


def replicate_seed(master_seed: int, index: int) -> int:
    digest = hashlib.sha256(f"{master_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def table_graph(table: TransactionTable) -> SimpleGraph:
    """Undirected simple projection of a (simulated) transaction table."""
    nodes = set(table.drawers) | set(table.acceptors) | set(table.discounters)
    edges = list(zip(table.drawers, table.acceptors)) + list(zip(table.acceptors, table.discounters))
    return SimpleGraph.from_edges(nodes, edges)


@dataclass(frozen=True)
class ReplicateResult:
    index: int
    seed: int
    digest: str
    repartition: RatioRepartition | None = None
    shared_acceptors: SharedPeerDistribution | None = None
    shared_discounters: SharedPeerDistribution | None = None
    structure: StructureReport | None = None


@dataclass(frozen=True)
class EnsembleResult:
    variant: str
    replicates: int
    master_seed: int
    metrics: tuple[str, ...]
    results: tuple[ReplicateResult, ...]

    def mean_bin_percentages(self) -> dict[str, tuple[float, float, float]]:
        """Per bin: ensemble-mean (more, equal, fewer) percentages."""
        sums: dict[str, list[float]] = {}
        for r in self.results:
            if r.repartition is None:
                continue
            for label, stats in r.repartition.bins.items():
                acc = sums.setdefault(label, [0.0, 0.0, 0.0, 0])
                if stats.drawers:
                    acc[0] += stats.pct_more_discounters
                    acc[1] += stats.pct_equal
                    acc[2] += stats.pct_fewer_discounters
                    acc[3] += 1
        return {
            label: (v[0] / v[3], v[1] / v[3], v[2] / v[3])
            for label, v in sums.items()
            if v[3]
        }

    def ratio_samples(self) -> list[tuple[float, ...]]:
        return [r.repartition.ratios for r in self.results if r.repartition is not None]


def run_ensemble(
    table: TransactionTable,
    variant: str,
    replicates: int = 100,
    master_seed: int = 0,
    metrics: tuple[str, ...] = ("repartition",),
) -> EnsembleResult:
    """Simulate ``replicates`` tables and compute the requested metric blocks."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    unknown = set(metrics) - set(METRIC_CHOICES)
    if unknown:
        raise ValueError(f"unknown ensemble metrics: {sorted(unknown)}")
    simulate = simulate_uniform if variant == "uniform" else simulate_degree_preserving
    results = []
    for i in range(replicates):
        seed = replicate_seed(master_seed, i)
        try:
            sim = simulate(table, seed)
            rep = ReplicateResult(
                index=i,
                seed=seed,
                digest=sim.digest(),
                repartition=repartition_from_columns(sim.drawers, sim.acceptors, sim.discounters)
                if "repartition" in metrics
                else None,
                shared_acceptors=shared_peer_distribution_from_columns(
                    sim.acceptors, sim.drawers, "acceptor"
                )
                if "shared_peers" in metrics
                else None,
                shared_discounters=shared_peer_distribution_from_columns(
                    sim.discounters, sim.drawers, "discounter"
                )
                if "shared_peers" in metrics
                else None,
                structure=structure_report(table_graph(sim)) if "structure" in metrics else None,
            )
        except Exception as exc:
            raise RuntimeError(f"replicate {i} failed: {exc}") from exc
        results.append(rep)
    return EnsembleResult(
        variant=variant,
        replicates=replicates,
        master_seed=master_seed,
        metrics=tuple(metrics),
        results=tuple(results),
    )


# ---------------------------------------------------------------------------
# Closed-form oracle for the uniform model
# ---------------------------------------------------------------------------


class CoincidenceProbs(NamedTuple):
    equal: float
    more_discounters: float
    fewer_discounters: float


_MAX_COINCIDENCE_K = 64


def _stirling2_row(k: int) -> list[int]:
    """Stirling numbers of the second kind S(k, 0..k)."""
    row = [1]
    for n in range(1, k + 1):
        prev = row
        row = [0] * (n + 1)
        for j in range(1, n + 1):
            row[j] = j * prev[j] if j < len(prev) else 0
            row[j] += prev[j - 1]
    return row


def distinct_count_distribution(k: int, n: int) -> list[Fraction]:
    """P(number of distinct values = j) for k iid uniform draws from n values."""
    if k < 1 or n < 1:
        raise ValueError("k and n must be positive")
    stirling = _stirling2_row(k)
    denom = Fraction(n) ** k
    probs = [Fraction(0)] * (k + 1)
    falling = 1
    for j in range(1, min(k, n) + 1):
        falling *= n - j + 1
        probs[j] = Fraction(stirling[j] * falling, 1) / denom
    return probs


def analytic_coincidence(k: int, n_acceptors: int, n_discounters: int) -> CoincidenceProbs:
    """Exact comparison of distinct-count draws for the idealized uniform model.

    For k independent uniform draws of acceptors (among n_acceptors) and
    discounters (among n_discounters), returns the probabilities that the
    distinct-discounter count equals, exceeds or falls below the distinct-
    acceptor count.  Exact rational convolution; guards k <= 64.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > _MAX_COINCIDENCE_K:
        raise ValueError(f"k must be <= {_MAX_COINCIDENCE_K}")
    if n_acceptors < 1 or n_discounters < 1:
        raise ValueError("universe sizes must be >= 1")
    pa = distinct_count_distribution(k, n_acceptors)
    pd = distinct_count_distribution(k, n_discounters)
    equal = Fraction(0)
    more = Fraction(0)
    fewer = Fraction(0)
    for a in range(1, k + 1):
        for d in range(1, k + 1):
            term = pa[a] * pd[d]
            if d == a:
                equal += term
            elif d > a:
                more += term
            else:
                fewer += term
    total = equal + more + fewer
    if total != 1:
        raise AssertionError(f"probabilities sum to {total}, expected 1")
    return CoincidenceProbs(float(equal), float(more), float(fewer))
