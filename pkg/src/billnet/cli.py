"""Command line entry point.

Subcommands: ingest, synth, analyze, simulate, compare, report.
Exit codes: 0 success, 1 usage, 2 parse failure, 3 validation failure,
4 computation failure.  BILLNET_SEED is the seed fallback for subcommands
that need one.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass

from . import reporting
from .errors import BillnetError, ParseError
from .ledger import (
    LedgerDataset,
    RegionTaxonomy,
    SynthConfig,
    load_dataset,
    save_dataset,
    summarize,
    synthesize,
    validate_dataset,
)
from .metrics import ad_ratio_repartition
from .network import build_network, export_edges
from .nullmodels import VARIANTS, make_table, run_ensemble
from .stats import compare_to_ensemble

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_COMPUTE = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    agents: str | None = None
    bills: str | None = None
    taxonomy: str | None = None
    out: str | None = None
    seed: int | None = None
    replicates: int = 100
    variant: str | None = None
    rules: tuple[str, ...] = ()
    metrics: tuple[str, ...] = ()
    svg: bool = False
    config: str | None = None

    def hash_payload(self, dataset_digest: str | None = None) -> dict:
        payload = dataclasses.asdict(self)
        payload.pop("out", None)  # output location must not change content
        payload["dataset_digest"] = dataset_digest
        return payload


def _dataset_digest(*paths) -> str:
    import hashlib

    h = hashlib.sha256()
    for p in paths:
        if p and os.path.exists(p):
            with open(p, "rb") as f:
                h.update(f.read())
            h.update(b"\x1e")
    return h.hexdigest()[:16]


def _resolve_seed(args, required: bool) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("BILLNET_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"BILLNET_SEED must be an integer, got {env!r}") from None
    if required:
        raise UsageError("a seed is required (use --seed or BILLNET_SEED)")
    return None


def _load_taxonomy(path: str | None) -> RegionTaxonomy:
    if path is None:
        return RegionTaxonomy.default()
    with open(path, "r", encoding="utf-8") as f:
        return RegionTaxonomy.from_json(f.read())


def _load(args) -> LedgerDataset:
    taxonomy = _load_taxonomy(args.taxonomy)
    return load_dataset(args.agents, args.bills, taxonomy)


def _csv_list(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(p.strip() for p in text.split(",") if p.strip())


def build_parser() -> _Parser:
    parser = _Parser(prog="billnet", description="Bill-of-exchange network toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_inputs(p):
        p.add_argument("--agents", required=True, help="agents.csv path")
        p.add_argument("--bills", required=True, help="bills.csv path")
        p.add_argument("--taxonomy", help="taxonomy.json path (default: built-in 9 regions)")

    p = sub.add_parser("ingest", help="parse and validate a dataset")
    add_inputs(p)
    p.add_argument("--rules", help="comma-separated validation rules")

    p = sub.add_parser("synth", help="generate a calibrated synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="SynthConfig JSON (default: 1906 preset)")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("analyze", help="build the network and write report.json")
    add_inputs(p)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", help=f"comma-separated blocks (default all): {','.join(reporting.BLOCK_NAMES)}")
    p.add_argument("--svg", action="store_true", help="emit presentation SVG histograms")

    for name in ("simulate", "compare"):
        p = sub.add_parser(
            name,
            help="run null-model ensembles" if name == "simulate" else "ensembles plus KS comparison",
        )
        add_inputs(p)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--replicates", type=int, default=100)
        p.add_argument("--variant", choices=VARIANTS, help="default: both variants")
        p.add_argument("--metrics", help="ensemble metrics: repartition,shared_peers,structure")
        p.add_argument("--export-edges", action="store_true", help="per-replicate edge list CSVs")

    p = sub.add_parser("report", help="render report.json as text")
    p.add_argument("--report", help="path to report.json")
    p.add_argument("--out", help="directory containing report.json")

    return parser


def cmd_ingest(args) -> int:
    dataset = _load(args)
    rules = _csv_list(args.rules)
    report = validate_dataset(dataset, rules)
    summary = summarize(dataset) if dataset.bills else None
    payload = {
        "ok": report.ok,
        "bills": len(dataset.bills),
        "agents": len(dataset.agents),
        "rules": list(rules),
        "violations": [dataclasses.asdict(v) for v in report.violations],
    }
    if summary is not None:
        payload["summary"] = reporting.summary_block(dataset)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_synth(args) -> int:
    seed = _resolve_seed(args, required=True)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            cfg = SynthConfig.from_json(f.read())
        cfg = dataclasses.replace(cfg, seed=seed)
    else:
        cfg = SynthConfig.paper_1906(seed=seed)
    dataset = synthesize(cfg)  # validates before any file is written
    os.makedirs(args.out, exist_ok=True)
    paths = save_dataset(dataset, args.out)
    cfg_path = os.path.join(args.out, "synth_config.json")
    with open(cfg_path, "w", encoding="utf-8") as f:
        f.write(cfg.to_json())
    paths["config"] = cfg_path
    print(json.dumps({"written": paths, "provenance": dataset.provenance}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_analyze(args) -> int:
    dataset = _load(args)
    run = RunConfig(
        subcommand="analyze",
        agents=args.agents,
        bills=args.bills,
        taxonomy=args.taxonomy,
        metrics=_csv_list(args.metrics) or reporting.BLOCK_NAMES,
        svg=bool(args.svg),
    )
    unknown = set(run.metrics) - set(reporting.BLOCK_NAMES)
    if unknown:
        raise UsageError(f"unknown metric blocks: {sorted(unknown)}")
    cfg_hash = reporting.config_hash(run.hash_payload(_dataset_digest(args.agents, args.bills)))
    network = build_network(dataset)
    report = reporting.assemble_report(dataset, network, cfg_hash, selected=run.metrics)
    os.makedirs(args.out, exist_ok=True)
    reporting.write_json(report, os.path.join(args.out, "report.json"))

    observed = None
    if "bins" in report.get("repartition", {}):
        observed = ad_ratio_repartition(network)
    reporting.write_table4_csv(os.path.join(args.out, "table4.csv"), observed)
    if "hhi" in report.get("concentration", {}).get("acceptor", {}):
        from .concentration import concentration_report

        reporting.write_table5_csv(
            os.path.join(args.out, "table5.csv"),
            {role: concentration_report(network, role) for role in ("acceptor", "discounter")},
        )
    if "metrics" in run.metrics:
        reporting.write_centrality_csv(os.path.join(args.out, "centrality.csv"), network)
    if "geography" in run.metrics:
        reporting.write_geography_csv(os.path.join(args.out, "geography.csv"), network)
    with open(os.path.join(args.out, "edges.csv"), "w", encoding="utf-8", newline="") as f:
        export_edges(network, f)
    if run.svg:
        reporting.write_svg_figures(args.out, network, observed)
    print(json.dumps({"written": args.out, "config_hash": cfg_hash}, indent=2, sort_keys=True))
    return EXIT_OK


def _run_ensembles(args, compare: bool) -> int:
    seed = _resolve_seed(args, required=True)
    dataset = _load(args)
    variants = (args.variant,) if args.variant else VARIANTS
    metrics = _csv_list(args.metrics) or (("repartition", "shared_peers") if compare else ("repartition",))
    run = RunConfig(
        subcommand="compare" if compare else "simulate",
        agents=args.agents,
        bills=args.bills,
        taxonomy=args.taxonomy,
        seed=seed,
        replicates=args.replicates,
        variant=args.variant,
        metrics=metrics,
    )
    cfg_hash = reporting.config_hash(run.hash_payload(_dataset_digest(args.agents, args.bills)))
    network = build_network(dataset)
    table = make_table(network)
    os.makedirs(args.out, exist_ok=True)

    observed = ad_ratio_repartition(network)
    sim_means: dict[str, dict] = {}
    ks_summary: dict = {"config_hash": cfg_hash, "master_seed": seed, "replicates": args.replicates}
    for variant in variants:
        ensemble = run_ensemble(
            table, variant, replicates=args.replicates, master_seed=seed, metrics=metrics
        )
        reporting.write_json(
            reporting.ensemble_to_dict(ensemble, cfg_hash),
            os.path.join(args.out, f"ensemble_{variant}.json"),
        )
        if args.export_edges:
            _export_replicate_edges(args.out, variant, table, ensemble)
        sim_means[variant] = ensemble.mean_bin_percentages()
        if compare:
            block = {
                "ratio": reporting.comparison_to_dict(
                    compare_to_ensemble(observed.ratios, ensemble.ratio_samples())
                )
            }
            if "shared_peers" in metrics:
                from .metrics import shared_peer_distribution

                for role, field in (("acceptor", "shared_acceptors"), ("discounter", "shared_discounters")):
                    obs_vals = tuple(shared_peer_distribution(network, role).values.values())
                    samples = [
                        tuple(getattr(r, field).values.values())
                        for r in ensemble.results
                        if getattr(r, field) is not None
                    ]
                    if samples:
                        block[f"shared_{role}s"] = reporting.comparison_to_dict(
                            compare_to_ensemble(obs_vals, samples)
                        )
            ks_summary[variant] = block

    reporting.write_table4_csv(os.path.join(args.out, "table4.csv"), observed, sim_means)
    if compare:
        reporting.write_json(ks_summary, os.path.join(args.out, "ks_summary.json"))
    print(
        json.dumps(
            {"written": args.out, "variants": list(variants), "config_hash": cfg_hash},
            indent=2,
            sort_keys=True,
        )
    )
    return EXIT_OK


def _export_replicate_edges(out_dir, variant, table, ensemble):
    import csv

    from .nullmodels import simulate_degree_preserving, simulate_uniform

    simulate = simulate_uniform if variant == "uniform" else simulate_degree_preserving
    for rep in ensemble.results:
        sim = simulate(table, rep.seed)
        path = os.path.join(out_dir, f"ensemble_{variant}_rep{rep.index:03d}_edges.csv")
        weights: dict[tuple[str, str, str], int] = {}
        for d, a, x in zip(sim.drawers, sim.acceptors, sim.discounters):
            weights[("DA", d, a)] = weights.get(("DA", d, a), 0) + 1
            weights[("AD", a, x)] = weights.get(("AD", a, x), 0) + 1
        with open(path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["kind", "src_id", "dst_id", "weight"])
            for (kind, src, dst), wt in sorted(weights.items()):
                w.writerow([kind, src, dst, wt])


def cmd_report(args) -> int:
    path = args.report or (os.path.join(args.out, "report.json") if args.out else None)
    if not path:
        raise UsageError("report needs --report or --out")
    with open(path, "r", encoding="utf-8") as f:
        report = json.load(f)
    sys.stdout.write(reporting.render_text(report))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.subcommand == "ingest":
            return cmd_ingest(args)
        if args.subcommand == "synth":
            return cmd_synth(args)
        if args.subcommand == "analyze":
            return cmd_analyze(args)
        if args.subcommand == "simulate":
            return _run_ensembles(args, compare=False)
        if args.subcommand == "compare":
            return _run_ensembles(args, compare=True)
        if args.subcommand == "report":
            return cmd_report(args)
        raise UsageError(f"unknown subcommand {args.subcommand!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (BillnetError, ValueError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
