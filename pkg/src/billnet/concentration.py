"""Market concentration: HHI, penetration, top-k shares and geography.

Market shares treat each distinct drawer relationship as one portion, so an
acceptor's portions are its distinct drawers and a discounter's portions are
the distinct drawers reached through any acceptor.  Bill-weighted shares are
available as a secondary mode but play no part in the headline table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ledger import RegionTaxonomy
from .network import TriadNetwork


@dataclass(frozen=True)
class ShareVector:
    """Shares in percent, ordered largest first (ties by label)."""

    shares: tuple[tuple[str, float], ...]

    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.shares)

    def total(self) -> float:
        return sum(v for _, v in self.shares)


@dataclass(frozen=True)
class ConcentrationReport:
    role: str
    portions: int
    hhi: float
    highest_penetration_pct: float
    top_k_shares: dict[int, float]


def _share_vector(counts: dict[str, int]) -> ShareVector:
    total = sum(counts.values())
    if total <= 0:
        raise ValueError("no portions")
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ShareVector(shares=tuple((k, 100.0 * v / total) for k, v in ordered))


def _distinct_drawer_map(network: TriadNetwork, role: str) -> dict[str, set[int]]:
    if role == "acceptor":
        actor_col = network.acceptor_idx
    elif role == "discounter":
        actor_col = network.discounter_idx
    else:
        raise ValueError(f"role must be acceptor or discounter, got {role!r}")
    out: dict[str, set[int]] = {}
    for actor, drawer in zip(actor_col, network.drawer_idx):
        out.setdefault(network.nodes[actor], set()).add(int(drawer))
    return out


def market_shares(network: TriadNetwork, role: str, portion: str = "drawers") -> ShareVector:
    """Per-actor market shares for the accepting or discounting side."""
    if portion == "drawers":
        counts = {a: len(ds) for a, ds in _distinct_drawer_map(network, role).items()}
    elif portion == "bills":
        col = network.acceptor_idx if role == "acceptor" else network.discounter_idx
        if role not in ("acceptor", "discounter"):
            raise ValueError(f"role must be acceptor or discounter, got {role!r}")
        binc = np.bincount(col, minlength=len(network.nodes))
        counts = {network.nodes[i]: int(binc[i]) for i in np.flatnonzero(binc)}
    else:
        raise ValueError(f"portion must be drawers or bills, got {portion!r}")
    if not counts:
        raise ValueError(f"no {role}s in network")
    return _share_vector(counts)


def hhi(shares: ShareVector) -> float:
    """Sum of squared percentage shares, 0 (atomistic) to 10,000 (monopoly)."""
    return float(sum(v * v for v in shares.values()))


def top_k_share(shares: ShareVector, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(sum(sorted(shares.values(), reverse=True)[:k]))


def highest_penetration(network: TriadNetwork, role: str) -> float:
    """Max share of all drawers reached by a single actor of the role."""
    n_drawers = int(network.is_drawer.sum())
    if n_drawers == 0:
        raise ValueError("network has no drawers")
    reach = _distinct_drawer_map(network, role)
    if not reach:
        raise ValueError(f"no {role}s in network")
    return 100.0 * max(len(ds) for ds in reach.values()) / n_drawers


def concentration_report(
    network: TriadNetwork, role: str, top_k: tuple[int, ...] = (3, 5, 10, 15)
) -> ConcentrationReport:
    shares = market_shares(network, role)
    return ConcentrationReport(
        role=role,
        portions=sum(len(ds) for ds in _distinct_drawer_map(network, role).values()),
        hhi=hhi(shares),
        highest_penetration_pct=highest_penetration(network, role),
        top_k_shares={k: top_k_share(shares, k) for k in top_k},
    )


def _drawer_regions(network: TriadNetwork, discounter: str, taxonomy: RegionTaxonomy) -> dict[str, int]:
    if discounter not in network.index:
        raise KeyError(discounter)
    reach = _distinct_drawer_map(network, "discounter").get(discounter)
    if not reach:
        raise ValueError(f"{discounter} discounts no bills")
    counts = {code: 0 for code in taxonomy.codes}
    for d in reach:
        region = network.agents[network.nodes[d]].region
        counts[region] = counts.get(region, 0) + 1
    return counts


def region_breakdown(network: TriadNetwork, discounter: str, taxonomy: RegionTaxonomy) -> ShareVector:
    """Regional composition of one discounter's distinct drawers (sums to 100)."""
    counts = _drawer_regions(network, discounter, taxonomy)
    total = sum(counts.values())
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ShareVector(shares=tuple((code, 100.0 * c / total) for code, c in ordered))


def geographic_hhi(network: TriadNetwork, discounter: str, taxonomy: RegionTaxonomy) -> float:
    """HHI of a discounter's drawer portfolio over the region taxonomy.

    With nine regions the value ranges from 10,000/9 (even spread) up to
    10,000 (single region).
    """
    return hhi(region_breakdown(network, discounter, taxonomy))


def aggregate_region_breakdown(network: TriadNetwork, taxonomy: RegionTaxonomy) -> ShareVector:
    """Regional composition of all drawers in the network."""
    counts = {code: 0 for code in taxonomy.codes}
    for i in np.flatnonzero(network.is_drawer):
        counts[network.agents[network.nodes[i]].region] += 1
    total = sum(counts.values())
    if total == 0:
        raise ValueError("network has no drawers")
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ShareVector(shares=tuple((code, 100.0 * c / total) for code, c in ordered))
