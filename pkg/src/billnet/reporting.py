"""Report bundle assembly and file writers.

report.json is the primary artifact and must be byte-identical across runs
with the same inputs, configuration and seed: no timestamps, sorted keys,
deterministic float repr.  CSV side tables mirror the shapes of the headline
tables (repartition, concentration) for direct diffing.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict
from typing import Any

import numpy as np

from . import concentration as conc
from . import metrics as met
from .ledger import LedgerDataset, summarize
from .network import TriadNetwork, demography, undirected_projection
from .nullmodels import EnsembleResult
from .stats import EnsembleComparison

PACKAGE_VERSION = "0.1.0"

TABLE4_ORDER = (met.ALL_BIN,) + met.RATIO_BINS


def config_hash(payload: dict[str, Any]) -> str:
    canon = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def metadata_block(cfg_hash: str, seed: int | None) -> dict[str, Any]:
    import scipy

    return {
        "config_hash": cfg_hash,
        "seed": seed,
        "versions": {
            "billnet": PACKAGE_VERSION,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def demography_block(network: TriadNetwork) -> dict[str, Any]:
    return asdict(demography(network))


def summary_block(dataset: LedgerDataset) -> dict[str, Any]:
    s = summarize(dataset)
    return {
        "bill_count": s.bill_count,
        "mean_amount_pence": s.mean_amount_pence,
        "mean_amount_pounds": s.mean_amount_pounds,
        "mean_maturity_days": s.mean_maturity_days,
        "mean_rate_bp": s.mean_rate_bp,
        "mean_rate_pct": s.mean_rate_pct,
        "distinct_drawers": s.distinct_drawers,
        "distinct_acceptors": s.distinct_acceptors,
        "distinct_discounters": s.distinct_discounters,
        "drawer_region_shares_pct": s.drawer_region_shares,
    }


def _vector_stats(vec: met.CentralityVector) -> dict[str, float]:
    vals = np.array(list(vec.values.values()))
    return {"min": float(vals.min()), "mean": float(vals.mean()), "max": float(vals.max())}


def metrics_block(network: TriadNetwork) -> dict[str, Any]:
    g = undirected_projection(network)
    vectors, report = met.full_metrics(g)
    out: dict[str, Any] = {
        "centrality": {name: _vector_stats(vec) for name, vec in sorted(vectors.items())},
        "structure": asdict(report),
    }
    binary_links = len(network.da_edges()) + len(network.ad_edges())
    out["degree"] = {
        "binary_links": binary_links,
        "mean_binary_all_degree": 2.0 * binary_links / len(network.nodes),
        "mean_transaction_all_degree": 4.0 * network.n_bills / len(network.nodes),
    }
    return out


def repartition_to_dict(rep: met.RatioRepartition) -> dict[str, Any]:
    return {
        "bins": {label: asdict(stats) for label, stats in rep.bins.items()},
        "mean_acceptors_per_drawer": rep.mean_acceptors,
        "mean_discounters_per_drawer": rep.mean_discounters,
        "median_ratio": rep.median_ratio,
    }


def repartition_block(network: TriadNetwork) -> dict[str, Any]:
    try:
        return repartition_to_dict(met.ad_ratio_repartition(network))
    except ValueError as exc:
        return {"skipped": str(exc)}


def concentration_block(network: TriadNetwork) -> dict[str, Any]:
    out = {}
    for role in ("acceptor", "discounter"):
        try:
            report = conc.concentration_report(network, role)
        except ValueError as exc:
            out[role] = {"skipped": str(exc)}
            continue
        out[role] = {
            "portions": report.portions,
            "hhi": report.hhi,
            "highest_penetration_pct": report.highest_penetration_pct,
            "top_k_shares_pct": {str(k): v for k, v in sorted(report.top_k_shares.items())},
        }
    return out


def geography_block(network: TriadNetwork, min_drawers: int = 10) -> dict[str, Any]:
    taxonomy = network.taxonomy
    reach = conc._distinct_drawer_map(network, "discounter")
    detail = []
    for actor in sorted(reach):
        n_drawers = len(reach[actor])
        if n_drawers < min_drawers:
            continue
        detail.append(
            {
                "discounter_id": actor,
                "drawers": n_drawers,
                "geographic_hhi": conc.geographic_hhi(network, actor, taxonomy),
                "region_shares_pct": dict(conc.region_breakdown(network, actor, taxonomy).shares),
            }
        )
    aggregate = dict(conc.aggregate_region_breakdown(network, taxonomy).shares)
    return {"min_drawers": min_drawers, "discounters": detail, "aggregate_region_shares_pct": aggregate}


def shared_peers_block(network: TriadNetwork) -> dict[str, Any]:
    out = {}
    for role in ("acceptor", "discounter"):
        try:
            dist = met.shared_peer_distribution(network, role)
        except ValueError as exc:
            out[role] = {"skipped": str(exc)}
            continue
        vals = np.array(list(dist.values.values()))
        out[role] = {
            "actors": len(dist.values),
            "histogram": dist.histogram,
            "share_none_pct": 100.0 * float((vals == 0).sum()) / len(vals),
            "max_pct": float(vals.max()),
        }
    return out


BLOCK_NAMES = (
    "demography",
    "summary",
    "metrics",
    "repartition",
    "concentration",
    "geography",
    "shared_peers",
)


def assemble_report(
    dataset: LedgerDataset,
    network: TriadNetwork,
    cfg_hash: str,
    seed: int | None = None,
    selected: tuple[str, ...] = BLOCK_NAMES,
) -> dict[str, Any]:
    builders = {
        "demography": lambda: demography_block(network),
        "summary": lambda: summary_block(dataset),
        "metrics": lambda: metrics_block(network),
        "repartition": lambda: repartition_block(network),
        "concentration": lambda: concentration_block(network),
        "geography": lambda: geography_block(network),
        "shared_peers": lambda: shared_peers_block(network),
    }
    report: dict[str, Any] = {"metadata": metadata_block(cfg_hash, seed)}
    for name in BLOCK_NAMES:
        if name in selected:
            try:
                block = builders[name]()
            except Exception as exc:
                raise RuntimeError(f"block {name!r}: {exc}") from exc
        else:
            block = {"skipped": "not selected"}
        block["config_hash"] = cfg_hash
        report[name] = block
    report["ensemble_comparison"] = {
        "skipped": "run the compare subcommand",
        "config_hash": cfg_hash,
    }
    return report


def write_json(payload: dict[str, Any], path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# CSV side tables
# ---------------------------------------------------------------------------


def write_table4_csv(path, observed: met.RatioRepartition | None,
                     simulated: dict[str, dict[str, tuple[float, float, float]]] | None = None):
    """Repartition rows: observed plus optional per-variant ensemble means."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(
            ["bin", "source", "drawers", "discounters_gt_acceptors_pct", "equal_pct",
             "discounters_lt_acceptors_pct"]
        )
        for label in TABLE4_ORDER:
            if observed is not None and label in observed.bins:
                s = observed.bins[label]
                w.writerow([label, "observed", s.drawers, f"{s.pct_more_discounters:.2f}",
                            f"{s.pct_equal:.2f}", f"{s.pct_fewer_discounters:.2f}"])
            for variant in sorted(simulated or {}):
                means = simulated[variant].get(label)
                if means is None:
                    continue
                drawers = observed.bins[label].drawers if observed and label in observed.bins else ""
                w.writerow([label, f"simulation_{variant}", drawers, f"{means[0]:.2f}",
                            f"{means[1]:.2f}", f"{means[2]:.2f}"])


def write_table5_csv(path, reports: dict[str, conc.ConcentrationReport]):
    roles = ("acceptor", "discounter")
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["metric"] + [f"{r}s" for r in roles])
        w.writerow(["portions"] + [reports[r].portions for r in roles])
        w.writerow(["hhi"] + [f"{reports[r].hhi:.2f}" for r in roles])
        w.writerow(["highest_penetration_pct"] + [f"{reports[r].highest_penetration_pct:.2f}" for r in roles])
        ks = sorted(reports[roles[0]].top_k_shares)
        for k in ks:
            w.writerow([f"top_{k}_share_pct"] + [f"{reports[r].top_k_shares[k]:.2f}" for r in roles])


def write_geography_csv(path, network: TriadNetwork):
    taxonomy = network.taxonomy
    reach = conc._distinct_drawer_map(network, "discounter")
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["discounter_id", "region", "share_pct"])
        for actor in sorted(reach):
            breakdown = dict(conc.region_breakdown(network, actor, taxonomy).shares)
            for code in taxonomy.codes:
                w.writerow([actor, code, f"{breakdown.get(code, 0.0):.4f}"])


def write_centrality_csv(path, network: TriadNetwork):
    g = undirected_projection(network)
    vectors, _ = met.full_metrics(g)
    with open(path, "w", encoding="utf-8", newline="") as f:
        met.write_centrality_csv(
            f, vectors["closeness"], vectors["betweenness"], vectors["eigenvector"]
        )


# ---------------------------------------------------------------------------
# Ensemble / comparison serialization
# ---------------------------------------------------------------------------


def shared_peer_to_dict(dist: met.SharedPeerDistribution | None) -> dict[str, Any] | None:
    if dist is None:
        return None
    return {"role": dist.role, "actors": len(dist.values), "histogram": dist.histogram}


def ensemble_to_dict(result: EnsembleResult, cfg_hash: str) -> dict[str, Any]:
    return {
        "config_hash": cfg_hash,
        "variant": result.variant,
        "replicates": result.replicates,
        "master_seed": result.master_seed,
        "metrics": list(result.metrics),
        "mean_bin_percentages": {
            label: {"discounters_gt_acceptors": v[0], "equal": v[1], "discounters_lt_acceptors": v[2]}
            for label, v in sorted(result.mean_bin_percentages().items())
        },
        "replicates_detail": [
            {
                "index": r.index,
                "seed": r.seed,
                "digest": r.digest,
                "repartition": repartition_to_dict(r.repartition) if r.repartition else None,
                "shared_acceptors": shared_peer_to_dict(r.shared_acceptors),
                "shared_discounters": shared_peer_to_dict(r.shared_discounters),
                "structure": asdict(r.structure) if r.structure else None,
            }
            for r in result.results
        ],
    }


def comparison_to_dict(comparison: EnsembleComparison) -> dict[str, Any]:
    return {
        "replicates": len(comparison.results),
        "D_min": comparison.d_min,
        "D_mean": comparison.d_mean,
        "D_max": comparison.d_max,
        "p_below_0_001_count": comparison.p_below_threshold,
        "p_threshold": comparison.p_threshold,
    }


# ---------------------------------------------------------------------------
# Text rendering and optional SVG histograms
# ---------------------------------------------------------------------------


def render_text(report: dict[str, Any]) -> str:
    lines = []
    meta = report.get("metadata", {})
    lines.append(f"billnet report  (config {meta.get('config_hash', '?')})")
    demo = report.get("demography", {})
    if "total_nodes" in demo:
        lines.append(
            f"nodes: {demo['total_nodes']}  drawers: {demo['drawers']}  "
            f"acceptors: {demo['acceptors']}  discounters: {demo['discounters']}  "
            f"multi-role: {demo['multi_role']}"
        )
    summ = report.get("summary", {})
    if "bill_count" in summ:
        lines.append(
            f"bills: {summ['bill_count']}  mean value: £{summ['mean_amount_pounds']:.2f}  "
            f"mean maturity: {summ['mean_maturity_days']:.1f}d  "
            f"mean rate: {summ['mean_rate_pct']:.2f}%"
        )
    metr = report.get("metrics", {})
    if "structure" in metr:
        s = metr["structure"]
        lines.append(
            f"clustering: {s['clustering']:.4f}  main component: {s['main_component_share']:.1f}%  "
            f"avg path length: {s['average_path_length']:.3f}"
        )
    rep = report.get("repartition", {})
    if "bins" in rep:
        lines.append("repartition (bin: drawers, %disc>acc, %equal, %disc<acc):")
        for label in TABLE4_ORDER:
            b = rep["bins"].get(label)
            if b and b["drawers"]:
                lines.append(
                    f"  {label:>5}: {b['drawers']:>6}  {b['pct_more_discounters']:6.2f}  "
                    f"{b['pct_equal']:6.2f}  {b['pct_fewer_discounters']:6.2f}"
                )
    con = report.get("concentration", {})
    for role in ("acceptor", "discounter"):
        r = con.get(role, {})
        if "hhi" in r:
            tops = "  ".join(f"top{k}: {v:.2f}%" for k, v in sorted(r["top_k_shares_pct"].items(), key=lambda kv: int(kv[0])))
            lines.append(
                f"{role}s: HHI {r['hhi']:.2f}  max penetration {r['highest_penetration_pct']:.2f}%  {tops}"
            )
    ens = report.get("ensemble_comparison", {})
    if "skipped" in ens:
        lines.append(f"ensemble comparison: skipped ({ens['skipped']})")
    return "\n".join(lines) + "\n"


def write_svg_figures(out_dir, network: TriadNetwork, observed: met.RatioRepartition | None):
    """Optional presentation-only histograms (dual structure, ratios, sharing)."""
    import os

    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "billnet"
    import matplotlib.pyplot as plt

    meta = {"Date": None}

    reach_a = conc._distinct_drawer_map(network, "acceptor")
    reach_d = conc._distinct_drawer_map(network, "discounter")
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for ax, reach, label in ((axes[0], reach_a, "acceptors"), (axes[1], reach_d, "discounters")):
        sizes = sorted(len(v) for v in reach.values())
        ax.hist(sizes, bins=min(50, max(sizes)), log=True)
        ax.set_xlabel("drawers per actor")
        ax.set_ylabel("actors")
        ax.set_title(label)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "dual_structure.svg"), metadata=meta)
    plt.close(fig)

    if observed is not None:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.hist(observed.ratios, bins=40)
        ax.set_xlabel("acceptor-to-discounter ratio")
        ax.set_ylabel("drawers")
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, "ratio_distribution.svg"), metadata=meta)
        plt.close(fig)

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for ax, role in ((axes[0], "acceptor"), (axes[1], "discounter")):
        try:
            dist = met.shared_peer_distribution(network, role)
        except ValueError:
            continue
        labels = list(dist.histogram)
        ax.bar(range(len(labels)), [dist.histogram[k] for k in labels])
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=60, fontsize=6)
        ax.set_title(f"shared drawers: {role}s")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "shared_peers.svg"), metadata=meta)
    plt.close(fig)
