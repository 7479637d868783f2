"""End-to-end segmentation: explore, partition, transform, cluster, prune.

Steps 1-2 (exploration, partitioning) run once on the full corpus; the
remaining steps run independently per region: fit transforms, pick k from
the density seed, optimize distance weights genetically, run the final
weighted k-means, then assemble the global segment report and prune the
segments that are too small to act on.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import derive_seed, uniform_weights
from .cluster import (
    DbscanConfig,
    KMeansConfig,
    KSelection,
    WeightedDBSCAN,
    WeightedKMeans,
    select_cluster_count,
)
from .dataset import ColumnTable, TableSchema, load_schema, parse_table, take_rows
from .eda import (
    ForestConfig,
    ImportanceResult,
    compute_missing_rates,
    outlier_report,
    rank_variable_importance,
)
from .gaopt import GaConfig, GaTrace, run_ga
from .partition import Region, RegionKey, RegionPartition, partition_regions, partition_summary
from .preprocess import RegionPreprocessor
from .synthgen import GeneratorSpec, generate_corpus

SPEC_VERSION = 1

REGION_SHARE_ATOL = 0.005
GLOBAL_SHARE_ATOL = 0.005


@dataclass
class PipelineConfig:
    schema_path: str | None = None
    data_path: str | None = None
    generator: GeneratorSpec | None = None
    split_variables: list[str] | None = None
    central_mass: float = 0.98
    dbscan: DbscanConfig = field(default_factory=DbscanConfig)
    dbscan_max_rows: int | None = 4000
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)
    select_radius: int = 2
    ga: GaConfig = field(default_factory=GaConfig)
    ga_max_rows: int | None = None
    ga_kmeans_n_init: int | None = None
    forest: ForestConfig = field(default_factory=ForestConfig)
    importance_targets: list[str] | None = None
    importance_enabled: bool = True
    region_min_global_share: float = 0.01
    cluster_min_global_share: float = 0.01
    min_region_rows: int = 20
    master_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in ("region_min_global_share", "cluster_min_global_share"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.data_path is None and self.generator is None:
            raise ValueError("config needs either data_path or generator")
        if self.data_path is not None and self.schema_path is None:
            raise ValueError("data_path requires schema_path")

    @classmethod
    def from_json(cls, text_or_path) -> "PipelineConfig":
        if isinstance(text_or_path, str) and text_or_path.lstrip().startswith("{"):
            raw = json.loads(text_or_path)
        else:
            with open(text_or_path, encoding="utf-8") as fh:
                raw = json.load(fh)
        generator = raw.get("generator")
        if isinstance(generator, str):
            generator = GeneratorSpec.from_json(generator)
        elif isinstance(generator, dict):
            generator = GeneratorSpec.from_json(json.dumps(generator))
        kwargs = dict(
            schema_path=raw.get("schema"),
            data_path=raw.get("data"),
            generator=generator,
            split_variables=raw.get("split_variables"),
            central_mass=raw.get("central_mass", 0.98),
            dbscan=DbscanConfig(**raw.get("dbscan", {})),
            dbscan_max_rows=raw.get("dbscan_max_rows", 4000),
            kmeans=KMeansConfig(**raw.get("kmeans", {})),
            select_radius=raw.get("select_radius", 2),
            ga=GaConfig(**raw.get("ga", {})),
            ga_max_rows=raw.get("ga_max_rows"),
            ga_kmeans_n_init=raw.get("ga_kmeans_n_init"),
            forest=ForestConfig(**raw.get("forest", {})),
            importance_targets=raw.get("importance_targets"),
            importance_enabled=raw.get("importance_enabled", True),
            region_min_global_share=raw.get("region_min_global_share", 0.01),
            cluster_min_global_share=raw.get("cluster_min_global_share", 0.01),
            min_region_rows=raw.get("min_region_rows", 20),
            master_seed=raw.get("master_seed", 0),
            threads=raw.get("threads", 1),
        )
        return cls(**kwargs)

    def load_table(self) -> ColumnTable:
        if self.data_path is not None:
            schema = load_schema(self.schema_path)
            with open(self.data_path, encoding="utf-8") as fh:
                return parse_table(fh.read(), schema)
        return generate_corpus(self.generator)

    def resolved_split_variables(self, schema: TableSchema) -> list[str]:
        if self.split_variables:
            for name in self.split_variables:
                schema.column(name)
            return list(self.split_variables)
        split = schema.split_variables
        if not split:
            raise ValueError("no split variables flagged in schema or config")
        return split


@dataclass(frozen=True)
class SegmentRow:
    region: int
    cluster: int
    region_share: float
    global_share: float
    relevant: bool = True


@dataclass(frozen=True)
class SegmentReport:
    rows: tuple[SegmentRow, ...]

    @property
    def n_segments(self) -> int:
        return len(self.rows)

    @property
    def n_relevant(self) -> int:
        return sum(1 for r in self.rows if r.relevant)

    @property
    def discarded_global_share(self) -> float:
        return sum(r.global_share for r in self.rows if not r.relevant)

    def region_totals(self) -> dict[int, float]:
        totals: dict[int, float] = {}
        for r in self.rows:
            totals[r.region] = totals.get(r.region, 0.0) + r.global_share
        return totals

    def validate(self, check_global: bool = True):
        per_region: dict[int, float] = {}
        for r in self.rows:
            per_region[r.region] = per_region.get(r.region, 0.0) + r.region_share
        for region, total in per_region.items():
            if abs(total - 1.0) > REGION_SHARE_ATOL:
                raise AssertionError(
                    f"region {region} shares sum to {total:.6f}")
        if check_global:
            total = sum(r.global_share for r in self.rows)
            if abs(total - 1.0) > GLOBAL_SHARE_ATOL:
                raise AssertionError(f"global shares sum to {total:.6f}")


def prune_segments(
    report: SegmentReport,
    region_min_global_share: float = 0.01,
    cluster_min_global_share: float = 0.01,
) -> SegmentReport:
    """Relevance pruning: first drop every cluster of regions whose total
    global share is under the region threshold, then drop the remaining
    clusters under the cluster threshold. Flags are recomputed from
    scratch, so re-pruning with new thresholds is supported."""
    region_totals: dict[int, float] = {}
    for r in report.rows:
        region_totals[r.region] = region_totals.get(r.region, 0.0) + r.global_share
    rows = []
    for r in report.rows:
        relevant = region_totals[r.region] >= region_min_global_share
        if relevant and r.global_share < cluster_min_global_share:
            relevant = False
        rows.append(dataclasses.replace(r, relevant=relevant))
    return SegmentReport(tuple(rows))


@dataclass
class RegionResult:
    region: Region
    status: str  # clustered | empty | too_small | no_features
    feature_names: list[str] = field(default_factory=list)
    dropped_columns: list[str] = field(default_factory=list)
    k_selection: KSelection | None = None
    weights: dict[str, float] | None = None
    ga_trace: GaTrace | None = None
    labels: np.ndarray | None = None
    davies_bouldin: float | None = None
    preprocessor_json: str | None = None


@dataclass
class PipelineResult:
    config: PipelineConfig
    table: ColumnTable
    partition: RegionPartition
    missing_rates: dict[str, float]
    outliers: list
    importance: ImportanceResult | None
    regions: list[RegionResult]
    report: SegmentReport
    assignments: np.ndarray  # (n_rows, 2): region index, 1-based cluster or -1


def _subsample(n: int, cap: int | None, seed: int) -> np.ndarray | None:
    if cap is None or n <= cap:
        return None
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=cap, replace=False))


def _process_region(
    cfg: PipelineConfig,
    table: ColumnTable,
    region: Region,
    seed_importance: ImportanceResult | None,
) -> RegionResult:
    result = RegionResult(region=region, status="clustered")
    n = region.n_rows
    if n == 0:
        result.status = "empty"
        return result
    region_seed = derive_seed(cfg.master_seed, *[int(b) for b in region.key.bits])

    region_table = take_rows(table, region.row_indices)
    prep = RegionPreprocessor(central_mass=cfg.central_mass).fit(region_table)
    result.feature_names = list(prep.feature_names_)
    result.dropped_columns = list(prep.dropped_columns_)
    result.preprocessor_json = prep.to_json()
    if not prep.feature_names_:
        result.status = "no_features"
        return result
    X = prep.transform(region_table)
    d = X.shape[1]

    if n < max(cfg.min_region_rows, 20):
        result.status = "too_small"
        return result

    weights_uniform = uniform_weights(d)
    min_samples = cfg.dbscan.min_samples
    if min_samples is None:
        min_samples = max(5, 2 * d)

    density_idx = _subsample(n, cfg.dbscan_max_rows, derive_seed(region_seed, 1))
    X_density = X if density_idx is None else X[density_idx]
    k_density = None
    if X_density.shape[0] >= min_samples:
        density = WeightedDBSCAN(
            eps=cfg.dbscan.eps, min_samples=cfg.dbscan.min_samples,
            weights=weights_uniform,
        ).fit(X_density)
        k_density = density.n_clusters_

    max_k = max(2, n // 10)
    selection = select_cluster_count(
        X,
        weights=weights_uniform,
        dbscan=cfg.dbscan,
        kmeans=dataclasses.replace(cfg.kmeans, seed=derive_seed(region_seed, 2)),
        radius=cfg.select_radius,
        k_density=k_density if k_density is not None else 0,
        max_k=max_k,
    )
    result.k_selection = selection
    k = selection.k

    seed_weights = None
    if seed_importance is not None:
        seed_weights = seed_importance.vector(prep.feature_names_)

    ga_idx = _subsample(n, cfg.ga_max_rows, derive_seed(region_seed, 4))
    X_ga = X if ga_idx is None else X[ga_idx]
    ga_kmeans = dataclasses.replace(
        cfg.kmeans,
        n_init=(cfg.ga_kmeans_n_init if cfg.ga_kmeans_n_init is not None
                else cfg.kmeans.n_init),
    )
    ga_cfg = dataclasses.replace(cfg.ga, seed=derive_seed(region_seed, 3))
    ga_result = run_ga(X_ga, k, ga_cfg, ga_kmeans, seed_weights=seed_weights)
    result.ga_trace = ga_result.trace
    best_w = ga_result.best_weights
    result.weights = dict(zip(prep.feature_names_,
                              [float(v) for v in best_w]))

    final = WeightedKMeans(
        n_clusters=k, weights=best_w, n_init=cfg.kmeans.n_init,
        max_iter=cfg.kmeans.max_iter, tol=cfg.kmeans.tol,
        random_state=derive_seed(region_seed, 5),
    ).fit(X)
    result.labels = final.labels_
    result.davies_bouldin = final.davies_bouldin_
    return result


def run_segmentation(
    cfg: PipelineConfig,
    only_region: RegionKey | None = None,
) -> PipelineResult:
    """Execute the full procedure and assemble the segment report."""
    table = cfg.load_table()
    if table.n_rows < 1:
        raise ValueError("cannot segment an empty corpus")
    split_vars = cfg.resolved_split_variables(table.schema)

    missing = compute_missing_rates(table)
    outliers = outlier_report(table)
    importance = None
    if cfg.importance_enabled:
        targets = cfg.importance_targets or table.schema.names
        try:
            importance = rank_variable_importance(
                table, targets,
                dataclasses.replace(cfg.forest,
                                    seed=derive_seed(cfg.master_seed, 7)),
            )
        except ValueError:
            importance = None

    part = partition_regions(table, split_vars)
    part.validate()

    todo = [r for r in part.regions
            if only_region is None or r.key == only_region]

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [pool.submit(_process_region, cfg, table, r, importance)
                       for r in todo]
            results = [f.result() for f in futures]
    else:
        results = [_process_region(cfg, table, r, importance) for r in todo]

    rows: list[SegmentRow] = []
    assignments = np.full((table.n_rows, 2), -1, dtype=np.int64)
    for res in results:
        region = res.region
        assignments[region.row_indices, 0] = region.index
        if res.status != "clustered":
            continue
        assignments[region.row_indices, 1] = res.labels + 1
        counts = np.bincount(res.labels)
        for cluster_id, count in enumerate(counts, start=1):
            rows.append(SegmentRow(
                region=region.index,
                cluster=cluster_id,
                region_share=count / region.n_rows,
                global_share=count / table.n_rows,
            ))
    report = prune_segments(
        SegmentReport(tuple(rows)),
        cfg.region_min_global_share,
        cfg.cluster_min_global_share,
    )
    return PipelineResult(
        config=cfg,
        table=table,
        partition=part,
        missing_rates=missing.per_column,
        outliers=outliers,
        importance=importance,
        regions=results,
        report=report,
        assignments=assignments,
    )


def _json_dump(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def segments_csv(report: SegmentReport) -> str:
    lines = ["region,cluster,pct_region,pct_global,relevant"]
    for r in report.rows:
        lines.append(
            f"{r.region},{r.cluster},{r.region_share * 100:.6f},"
            f"{r.global_share * 100:.6f},{int(r.relevant)}")
    return "\n".join(lines) + "\n"


def parse_segments_csv(text: str) -> SegmentReport:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if header[:4] != ["region", "cluster", "pct_region", "pct_global"]:
        raise ValueError(f"unexpected segments header: {lines[0]!r}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        rows.append(SegmentRow(
            region=int(parts[0]),
            cluster=int(parts[1]),
            region_share=float(parts[2]) / 100.0,
            global_share=float(parts[3]) / 100.0,
            relevant=bool(int(parts[4])) if len(parts) > 4 else True,
        ))
    return SegmentReport(tuple(rows))


def assignments_csv(result: PipelineResult) -> str:
    lines = ["row,region,cluster"]
    for i in range(result.assignments.shape[0]):
        region, cluster = result.assignments[i]
        lines.append(f"{i},{region},{cluster}")
    return "\n".join(lines) + "\n"


def eda_json(result: PipelineResult) -> str:
    payload = {
        "spec_version": SPEC_VERSION,
        "missing_rates": {k: float(v) for k, v in result.missing_rates.items()},
        "outliers": [
            {
                "column": s.column,
                "mean": float(s.mean),
                "std": float(s.std),
                "outlier_fraction": float(s.outlier_fraction),
                "n_outliers": int(s.outlier_rows.size),
                "degenerate_spread": bool(s.degenerate_spread),
            }
            for s in result.outliers
        ],
        "importance": (
            None if result.importance is None else {
                "aggregated": {k: float(v) for k, v in
                               result.importance.importances.items()},
                "skipped": [list(s) for s in result.importance.skipped],
            }
        ),
    }
    return _json_dump(payload)


def _config_payload(cfg: PipelineConfig) -> dict:
    payload = dataclasses.asdict(cfg)
    if cfg.generator is not None:
        payload["generator"] = json.loads(cfg.generator.to_json())
    return payload


def emit_reports(result: PipelineResult, out_dir: str) -> dict[str, str]:
    """Write all artifacts; returns {relative path: sha256}. The manifest,
    written last, embeds every other file's hash."""
    os.makedirs(out_dir, exist_ok=True)
    os.makedirs(os.path.join(out_dir, "weights"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "ga_trace"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "transforms"), exist_ok=True)

    files: dict[str, str] = {}

    def write(rel_path: str, text: str):
        path = os.path.join(out_dir, rel_path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        files[rel_path] = hashlib.sha256(text.encode("utf-8")).hexdigest()

    write("segments.csv", segments_csv(result.report))
    write("assignments.csv", assignments_csv(result))
    write("eda.json", eda_json(result))
    write("partition.json", _json_dump({
        "spec_version": SPEC_VERSION,
        "split_variables": list(result.partition.split_variables),
        "regions": partition_summary(result.partition),
    }))
    for res in result.regions:
        idx = res.region.index
        if res.weights is not None:
            write(f"weights/region_{idx}.json", _json_dump({
                "spec_version": SPEC_VERSION,
                "region": idx,
                "key": res.region.key.label,
                "weights": res.weights,
            }))
        if res.ga_trace is not None:
            write(f"ga_trace/region_{idx}.csv", res.ga_trace.to_csv())
        if res.preprocessor_json is not None:
            write(f"transforms/region_{idx}.json", res.preprocessor_json)

    manifest = {
        "spec_version": SPEC_VERSION,
        "master_seed": result.config.master_seed,
        "config": _config_payload(result.config),
        "totals": {
            "n_segments": result.report.n_segments,
            "n_relevant": result.report.n_relevant,
            "discarded_global_share": result.report.discarded_global_share,
        },
        "regions": [
            {
                "region": res.region.index,
                "key": res.region.key.label,
                "rows": res.region.n_rows,
                "global_share": res.region.share,
                "status": res.status,
                "k": (res.k_selection.k if res.k_selection else None),
                "k_density": (res.k_selection.k_density
                              if res.k_selection else None),
                "davies_bouldin": (
                    None if res.davies_bouldin is None
                    else ("inf" if math.isinf(res.davies_bouldin)
                          else float(res.davies_bouldin))),
                "dropped_columns": res.dropped_columns,
            }
            for res in result.regions
        ],
        "files": files,
    }
    manifest_text = _json_dump(manifest)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(manifest_text)
    files["manifest.json"] = hashlib.sha256(
        manifest_text.encode("utf-8")).hexdigest()
    return files
