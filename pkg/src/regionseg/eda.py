"""Exploratory statistics: missing rates, 3-sigma outliers, dense intervals,
and variable importance estimated through artificial supervised problems.

Importance works by predicting each target column from the remaining
features with a random forest and averaging the per-model
mean-decrease-in-impurity importances into one simplex vector. That vector
later seeds the genetic weight search.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import RandomForestClassifier, RandomForestRegressor

from ._validation import derive_seed
from .dataset import CATEGORICAL, CONTINUOUS, ColumnTable

IMPORTANCE_ATOL = 1e-9


@dataclass(frozen=True)
class MissingReport:
    per_column: dict[str, float]

    def __post_init__(self):
        for name, frac in self.per_column.items():
            if not 0.0 <= frac <= 1.0:
                raise ValueError(f"missing fraction for {name!r} outside [0,1]")


@dataclass(frozen=True)
class OutlierStats:
    column: str
    mean: float
    std: float
    outlier_fraction: float
    outlier_rows: np.ndarray
    degenerate_spread: bool = False


@dataclass(frozen=True)
class DenseInterval:
    column: str
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"dense interval has lo {self.lo} > hi {self.hi}")


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 50
    max_depth: int = 8
    min_leaf: int = 5
    seed: int | None = None

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1:
            raise ValueError("n_trees and max_depth must be >= 1")


@dataclass
class ImportanceResult:
    """Aggregated per-variable importance over all solved artificial problems."""

    importances: dict[str, float]
    skipped: list[tuple[str, str]] = field(default_factory=list)
    per_model: dict[str, dict[str, float]] = field(default_factory=dict)

    def vector(self, feature_names) -> np.ndarray:
        """Importance restricted to feature_names, renormalized to sum 1."""
        v = np.array([self.importances.get(n, 0.0) for n in feature_names])
        total = v.sum()
        if total <= 0:
            return np.full(len(v), 1.0 / len(v))
        return v / total


def compute_missing_rates(table: ColumnTable) -> MissingReport:
    if table.n_rows < 1:
        raise ValueError("missing rates need at least one row")
    return MissingReport({
        c.name: float(table.missing_mask(c.name).mean())
        for c in table.schema.columns
    })


def flag_outliers(table: ColumnTable, column: str, k_sigma: float = 3.0) -> OutlierStats:
    """Rows where |x - mean| > k_sigma * std over the non-missing values.

    Uses the population standard deviation. A constant column yields no
    outliers and sets the degenerate-spread flag.
    """
    spec = table.schema.column(column)
    if spec.kind != CONTINUOUS:
        raise ValueError(f"column {column!r} is not continuous")
    mask = ~table.missing_mask(column)
    values = table.values(column)[mask]
    if values.size < 2:
        raise ValueError(f"column {column!r} needs >= 2 non-missing values")
    mean = float(values.mean())
    std = float(values.std())
    if std == 0.0:
        return OutlierStats(column, mean, std, 0.0,
                            np.empty(0, dtype=np.intp), degenerate_spread=True)
    rows = np.flatnonzero(mask)
    flagged = rows[np.abs(values - mean) > k_sigma * std]
    return OutlierStats(column, mean, std, flagged.size / values.size, flagged)


def outlier_report(table: ColumnTable, k_sigma: float = 3.0) -> list[OutlierStats]:
    """OutlierStats for every continuous column with enough data."""
    report = []
    for spec in table.schema.columns:
        if spec.kind != CONTINUOUS:
            continue
        if (~table.missing_mask(spec.name)).sum() < 2:
            continue
        report.append(flag_outliers(table, spec.name, k_sigma))
    return report


def dense_interval_of(values: np.ndarray, central_mass: float = 0.98) -> tuple[float, float]:
    """Linear-interpolation quantile bounds holding the central mass."""
    if not 0.0 < central_mass <= 1.0:
        raise ValueError("central_mass must be in (0, 1]")
    tail = (1.0 - central_mass) / 2.0
    lo, hi = np.quantile(values, [tail, 1.0 - tail])
    return float(lo), float(hi)


def estimate_dense_interval(
    table: ColumnTable, column: str, central_mass: float = 0.98
) -> DenseInterval:
    spec = table.schema.column(column)
    if spec.kind != CONTINUOUS:
        raise ValueError(f"column {column!r} is not continuous")
    values = table.non_missing_values(column)
    if values.size < 10:
        raise ValueError(
            f"column {column!r} needs >= 10 non-missing values, has {values.size}")
    lo, hi = dense_interval_of(values, central_mass)
    return DenseInterval(column, lo, hi)


def _frequency_codes(labels: np.ndarray) -> np.ndarray:
    """Integer codes by descending frequency, ties broken lexicographically."""
    counts = Counter(labels.tolist())
    order = sorted(counts, key=lambda lab: (-counts[lab], lab))
    mapping = {lab: i for i, lab in enumerate(order)}
    return np.array([mapping[lab] for lab in labels], dtype=np.float64)


def _predictor_matrix(table: ColumnTable, predictors: list[str]) -> np.ndarray:
    """Numeric predictor matrix with median/mode imputation of missing cells."""
    cols = []
    for name in predictors:
        spec = table.schema.column(name)
        mask = table.missing_mask(name)
        if spec.kind == CONTINUOUS:
            col = table.values(name).astype(np.float64).copy()
            avail = col[~mask]
            fill = float(np.median(avail)) if avail.size else 0.0
            col[mask] = fill
        else:
            raw = table.values(name)
            avail = raw[~mask]
            if avail.size:
                counts = Counter(avail.tolist())
                fill = sorted(counts, key=lambda lab: (-counts[lab], lab))[0]
            else:
                fill = ""
            filled = np.where(mask, fill, raw)
            col = _frequency_codes(filled)
        cols.append(col)
    return np.column_stack(cols)


def aggregate_importances(per_model: dict[str, dict[str, float]]) -> dict[str, float]:
    """Mean normalized importance of each variable over the models where it
    appears as a predictor (no final renormalization)."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for model_importances in per_model.values():
        for name, value in model_importances.items():
            sums[name] = sums.get(name, 0.0) + float(value)
            counts[name] = counts.get(name, 0) + 1
    return {name: sums[name] / counts[name] for name in sums}


def rank_variable_importance(
    table: ColumnTable,
    targets,
    forest: ForestConfig | None = None,
    min_target_rows: int = 30,
) -> ImportanceResult:
    """Aggregate impurity-based importance across one forest per target.

    For each target, a forest is fit on the rows where that target is
    available (regression for continuous targets, classification for
    categorical ones); predictors are all other columns with missing cells
    imputed by median/mode. Each variable's final importance is its mean
    normalized importance over the models where it appears as a predictor,
    renormalized onto the simplex.
    """
    forest = forest or ForestConfig()
    targets = list(targets)
    all_names = table.schema.names
    result = ImportanceResult(importances={})

    for t_idx, target in enumerate(targets):
        spec = table.schema.column(target)
        avail = ~table.missing_mask(target)
        n_avail = int(avail.sum())
        if n_avail < min_target_rows:
            result.skipped.append(
                (target, f"only {n_avail} non-missing rows (< {min_target_rows})"))
            continue
        predictors = [n for n in all_names if n != target]
        if not predictors:
            result.skipped.append((target, "no predictors"))
            continue

        sub = {n: table.values(n)[avail] for n in all_names}
        sub_miss = {n: table.missing_mask(n)[avail] for n in all_names}
        sub_table = ColumnTable(table.schema, sub, sub_miss)
        X = _predictor_matrix(sub_table, predictors)
        seed = derive_seed(forest.seed or 0, t_idx)
        max_features = int(np.ceil(np.sqrt(len(predictors))))
        common = dict(
            n_estimators=forest.n_trees,
            max_depth=forest.max_depth,
            min_samples_leaf=forest.min_leaf,
            max_features=max_features,
            random_state=seed,
            n_jobs=1,
        )
        if spec.kind == CONTINUOUS:
            y = sub_table.values(target).astype(np.float64)
            model = RandomForestRegressor(**common)
        else:
            y = sub_table.values(target).astype(str)
            if len(set(y.tolist())) < 2:
                result.skipped.append((target, "target has a single class"))
                continue
            model = RandomForestClassifier(**common)
        model.fit(X, y)
        imp = np.asarray(model.feature_importances_, dtype=np.float64)
        total = imp.sum()
        if total > 0:
            imp = imp / total
        else:
            imp = np.full(len(predictors), 1.0 / len(predictors))
        result.per_model[target] = dict(zip(predictors, imp.tolist()))

    if not result.per_model:
        raise ValueError(
            "no artificial problem could be solved; all targets were skipped")
    means = aggregate_importances(result.per_model)
    total = sum(means.values())
    result.importances = {n: v / total for n, v in means.items()}
    assert abs(sum(result.importances.values()) - 1.0) <= IMPORTANCE_ATOL
    return result


def render_missing_report(report: MissingReport) -> str:
    lines = ["column                         missing",
             "-" * 40]
    for name, frac in report.per_column.items():
        lines.append(f"{name:<30} {frac:>7.2%}")
    return "\n".join(lines)


def render_outlier_report(stats: list[OutlierStats]) -> str:
    lines = ["column                         mean         std       outliers",
             "-" * 62]
    for s in stats:
        tag = " (degenerate spread)" if s.degenerate_spread else ""
        lines.append(
            f"{s.column:<30} {s.mean:>9.4g} {s.std:>11.4g} "
            f"{s.outlier_fraction:>11.2%}{tag}")
    return "\n".join(lines)
