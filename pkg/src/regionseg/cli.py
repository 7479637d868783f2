"""Command-line entry points: synth, eda, segment, report."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .dataset import schema_to_json, write_csv
from .eda import (
    compute_missing_rates,
    outlier_report,
    render_missing_report,
    render_outlier_report,
)
from .partition import RegionKey
from .pipeline import (
    PipelineConfig,
    eda_json,
    emit_reports,
    parse_segments_csv,
    prune_segments,
    run_segmentation,
    segments_csv,
)
from .synthgen import GeneratorSpec, generate_corpus


def _write(path: str, text: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_synth(args) -> int:
    spec = GeneratorSpec.from_json(args.config)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    table = generate_corpus(spec)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "corpus.csv"), write_csv(table))
    _write(os.path.join(args.out, "schema.json"), schema_to_json(spec.schema()))
    print(f"wrote {table.n_rows} rows to {args.out}/corpus.csv")
    return 0


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_json(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    if getattr(args, "threads", None) is not None:
        cfg.threads = args.threads
    return cfg


def cmd_eda(args) -> int:
    cfg = _load_config(args)
    table = cfg.load_table()
    missing = compute_missing_rates(table)
    outliers = outlier_report(table)
    print(render_missing_report(missing))
    print()
    print(render_outlier_report(outliers))
    payload = {
        "spec_version": 1,
        "missing_rates": {k: float(v) for k, v in missing.per_column.items()},
        "outliers": [
            {
                "column": s.column,
                "mean": float(s.mean),
                "std": float(s.std),
                "outlier_fraction": float(s.outlier_fraction),
                "n_outliers": int(s.outlier_rows.size),
                "degenerate_spread": bool(s.degenerate_spread),
            }
            for s in outliers
        ],
    }
    _write(os.path.join(args.out, "eda.json"),
           json.dumps(payload, indent=2, sort_keys=True))
    print(f"\nwrote {args.out}/eda.json")
    return 0


def cmd_segment(args) -> int:
    cfg = _load_config(args)
    only = RegionKey.from_label(args.region) if args.region else None
    result = run_segmentation(cfg, only_region=only)
    emit_reports(result, args.out)
    rep = result.report
    print(f"{rep.n_segments} segments, {rep.n_relevant} relevant, "
          f"{rep.discarded_global_share:.2%} of population discarded")
    print(f"reports written to {args.out}")
    return 0


def cmd_report(args) -> int:
    with open(args.segments, encoding="utf-8") as fh:
        report = parse_segments_csv(fh.read())
    pruned = prune_segments(report, args.region_min, args.cluster_min)
    _write(os.path.join(args.out, "segments.csv"), segments_csv(pruned))
    print(f"{pruned.n_segments} segments, {pruned.n_relevant} relevant, "
          f"{pruned.discarded_global_share:.2%} of population discarded")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regionseg",
        description="Region-partitioned customer segmentation with "
                    "GA-optimized weighted k-means.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", required=True, help="generator spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eda", help="exploratory reports")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_eda)

    p = sub.add_parser("segment", help="run the full segmentation pipeline")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--region", default=None,
                   help="run a single region, e.g. 101")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("report", help="re-prune an existing segment report")
    p.add_argument("--segments", required=True, help="path to segments.csv")
    p.add_argument("--out", required=True)
    p.add_argument("--region-min", type=float, default=0.01,
                   dest="region_min")
    p.add_argument("--cluster-min", type=float, default=0.01,
                   dest="cluster_min")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
