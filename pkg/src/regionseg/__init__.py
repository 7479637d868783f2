"""Region-partitioned customer segmentation with GA-optimized weighted k-means."""

from .cluster import (
    DbscanConfig,
    KMeansConfig,
    WeightedDBSCAN,
    WeightedKMeans,
    davies_bouldin,
    select_cluster_count,
    weighted_distance,
)
from .dataset import (
    ColumnSpec,
    ColumnTable,
    TableSchema,
    availability_mask,
    load_schema,
    parse_table,
    select_rows,
    write_csv,
)
from .eda import (
    ForestConfig,
    compute_missing_rates,
    estimate_dense_interval,
    flag_outliers,
    rank_variable_importance,
)
from .gaopt import GaConfig, GeneticWeightOptimizer, run_ga
from .partition import RegionKey, partition_regions, region_key
from .pipeline import (
    PipelineConfig,
    SegmentReport,
    SegmentRow,
    emit_reports,
    prune_segments,
    run_segmentation,
)
from .preprocess import (
    FrequencyLabelEncoder,
    RankNormalizer,
    RegionPreprocessor,
    impute_missing,
)
from .synthgen import GeneratorSpec, demo_generator_spec, generate_corpus

__version__ = "0.1.0"

__all__ = [
    "ColumnSpec",
    "ColumnTable",
    "DbscanConfig",
    "ForestConfig",
    "FrequencyLabelEncoder",
    "GaConfig",
    "GeneratorSpec",
    "GeneticWeightOptimizer",
    "KMeansConfig",
    "PipelineConfig",
    "RankNormalizer",
    "RegionKey",
    "RegionPreprocessor",
    "SegmentReport",
    "SegmentRow",
    "TableSchema",
    "WeightedDBSCAN",
    "WeightedKMeans",
    "availability_mask",
    "compute_missing_rates",
    "davies_bouldin",
    "demo_generator_spec",
    "emit_reports",
    "estimate_dense_interval",
    "flag_outliers",
    "generate_corpus",
    "impute_missing",
    "load_schema",
    "parse_table",
    "partition_regions",
    "prune_segments",
    "rank_variable_importance",
    "region_key",
    "run_ga",
    "run_segmentation",
    "select_cluster_count",
    "select_rows",
    "weighted_distance",
    "write_csv",
]
