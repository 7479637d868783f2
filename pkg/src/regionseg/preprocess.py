"""Per-region transforms mapping raw columns into the unit interval.

Continuous columns go through a density-aware rank normalization: values
are clamped to a dense interval, scored by their midrank in the clamped
training sample and re-anchored so the training minimum maps to 0 and the
maximum to 1. Categorical columns are label encoded by descending training
frequency and embedded evenly into [0, 1]. Residual missing cells are
median/mode imputed inside each region.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .dataset import CATEGORICAL, CONTINUOUS, ColumnTable
from .eda import dense_interval_of


def _mode(labels: np.ndarray) -> str:
    counts = Counter(labels.tolist())
    return sorted(counts, key=lambda lab: (-counts[lab], lab))[0]


class RankNormalizer(BaseEstimator, TransformerMixin):
    """Monotone map of a continuous column onto [0, 1] by clamped midranks.

    The transform of x is (y(x) - y_min) / (y_max - y_min) clipped to
    [0, 1], where y(x) = (strictly-smaller count + half the tie count) / n
    over the clamped training values, anchored at the clamped training
    minimum and maximum. A constant training sample yields the degenerate
    transform that returns 0.5 everywhere.

    Parameters
    ----------
    lo, hi : float or None
        Clamp interval. When None, computed from the training values as
        the central-mass quantile interval.
    central_mass : float
        Central data mass the automatic clamp interval must contain.
    """

    def __init__(self, lo: float | None = None, hi: float | None = None,
                 central_mass: float = 0.98):
        self.lo = lo
        self.hi = hi
        self.central_mass = central_mass

    def fit(self, X, y=None):
        values = np.asarray(X, dtype=np.float64).ravel()
        if values.size < 1:
            raise ValueError("RankNormalizer needs at least one training value")
        if not np.all(np.isfinite(values)):
            raise ValueError("training values must be finite")
        if self.lo is None or self.hi is None:
            lo, hi = dense_interval_of(values, self.central_mass)
            if self.lo is not None:
                lo = self.lo
            if self.hi is not None:
                hi = self.hi
        else:
            lo, hi = float(self.lo), float(self.hi)
        if lo > hi:
            raise ValueError(f"clamp interval has lo {lo} > hi {hi}")
        clamped = np.clip(values, lo, hi)
        self.lo_ = lo
        self.hi_ = hi
        self.sorted_values_ = np.sort(clamped)
        n = self.sorted_values_.size
        self.degenerate_ = bool(self.sorted_values_[0] == self.sorted_values_[-1])
        if not self.degenerate_:
            self.y_min_ = float(self._midrank(self.sorted_values_[:1])[0])
            self.y_max_ = float(self._midrank(self.sorted_values_[-1:])[0])
        else:
            self.y_min_ = self.y_max_ = 0.5
        return self

    def _midrank(self, x: np.ndarray) -> np.ndarray:
        lower = np.searchsorted(self.sorted_values_, x, side="left")
        upper = np.searchsorted(self.sorted_values_, x, side="right")
        return (lower + upper) / (2.0 * self.sorted_values_.size)

    def transform(self, X):
        if not hasattr(self, "sorted_values_"):
            raise NotFittedError("RankNormalizer is not fitted")
        x = np.asarray(X, dtype=np.float64)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if not np.all(np.isfinite(x)):
            raise ValueError("transform input must be finite")
        if self.degenerate_:
            out = np.full(x.shape, 0.5)
        else:
            y = self._midrank(np.clip(x, self.lo_, self.hi_))
            out = np.clip((y - self.y_min_) / (self.y_max_ - self.y_min_), 0.0, 1.0)
        return float(out[0]) if scalar else out

    def to_dict(self) -> dict:
        return {
            "lo": self.lo_,
            "hi": self.hi_,
            "values": self.sorted_values_.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RankNormalizer":
        model = cls(lo=payload["lo"], hi=payload["hi"])
        return model.fit(np.asarray(payload["values"], dtype=np.float64))


class FrequencyLabelEncoder(BaseEstimator, TransformerMixin):
    """Label encoding by descending training frequency, embedded into [0, 1].

    Index i (ties broken lexicographically) maps to i / (C - 1); a single
    category maps to 0.0. Unseen labels map to 1.0, the least-frequent end,
    and are counted in ``unseen_count_``.
    """

    def fit(self, X, y=None):
        labels = [str(v) for v in np.asarray(X, dtype=object).ravel()]
        if not labels:
            raise ValueError("FrequencyLabelEncoder needs at least one label")
        counts = Counter(labels)
        order = sorted(counts, key=lambda lab: (-counts[lab], lab))
        c = len(order)
        self.categories_ = order
        self.mapping_ = {
            lab: (i / (c - 1) if c > 1 else 0.0) for i, lab in enumerate(order)
        }
        self.unseen_count_ = 0
        return self

    def transform(self, X):
        if not hasattr(self, "mapping_"):
            raise NotFittedError("FrequencyLabelEncoder is not fitted")
        values = np.asarray(X, dtype=object).ravel()
        out = np.empty(values.shape[0], dtype=np.float64)
        for i, raw in enumerate(values):
            lab = str(raw)
            if lab in self.mapping_:
                out[i] = self.mapping_[lab]
            else:
                out[i] = 1.0
                self.unseen_count_ += 1
        return out

    def to_dict(self) -> dict:
        return {"categories": list(self.categories_)}

    @classmethod
    def from_dict(cls, payload: dict) -> "FrequencyLabelEncoder":
        model = cls()
        order = list(payload["categories"])
        c = len(order)
        model.categories_ = order
        model.mapping_ = {
            lab: (i / (c - 1) if c > 1 else 0.0) for i, lab in enumerate(order)
        }
        model.unseen_count_ = 0
        return model


@dataclass
class ImputeReport:
    fill_values: dict[str, object] = field(default_factory=dict)
    dropped_columns: list[str] = field(default_factory=list)


def impute_missing(table: ColumnTable) -> tuple[ColumnTable, ImputeReport]:
    """Fill residual missing cells with the column median (continuous) or
    mode (categorical, lexicographic tiebreak) computed within the table.

    Columns with no values at all cannot be filled; they stay missing and
    are reported as dropped from the clustering feature set.
    """
    report = ImputeReport()
    cols: dict[str, np.ndarray] = {}
    miss: dict[str, np.ndarray] = {}
    for spec in table.schema.columns:
        mask = table.missing_mask(spec.name)
        raw = table.values(spec.name)
        avail = raw[~mask]
        if avail.size == 0:
            report.dropped_columns.append(spec.name)
            cols[spec.name] = raw
            miss[spec.name] = mask
            continue
        if spec.kind == CONTINUOUS:
            fill = float(np.median(avail))
            filled = np.where(mask, fill, raw)
        else:
            fill = _mode(avail)
            filled = np.where(mask, fill, raw)
        report.fill_values[spec.name] = fill
        cols[spec.name] = filled
        miss[spec.name] = np.zeros(table.n_rows, dtype=bool)
    return ColumnTable(table.schema, cols, miss), report


class RegionPreprocessor(BaseEstimator, TransformerMixin):
    """Fit per-column transforms of one region and emit its feature matrix.

    Continuous columns get a RankNormalizer clamped to their dense
    interval; categorical columns a FrequencyLabelEncoder; missing cells
    are filled with the region median/mode before transforming. Columns
    that are entirely missing inside the region are dropped from the
    feature set and listed in ``dropped_columns_``.
    """

    def __init__(self, central_mass: float = 0.98):
        self.central_mass = central_mass

    def fit(self, table: ColumnTable, y=None):
        self.feature_names_: list[str] = []
        self.dropped_columns_: list[str] = []
        self.transformers_: dict[str, object] = {}
        self.fill_values_: dict[str, object] = {}
        for spec in table.schema.columns:
            avail = table.non_missing_values(spec.name)
            if avail.size == 0:
                self.dropped_columns_.append(spec.name)
                continue
            if spec.kind == CONTINUOUS:
                if avail.size >= 10:
                    lo, hi = dense_interval_of(avail, self.central_mass)
                else:
                    lo, hi = float(avail.min()), float(avail.max())
                model = RankNormalizer(lo=lo, hi=hi).fit(avail)
                self.fill_values_[spec.name] = float(np.median(avail))
            else:
                model = FrequencyLabelEncoder().fit(avail)
                self.fill_values_[spec.name] = _mode(avail)
            self.transformers_[spec.name] = model
            self.feature_names_.append(spec.name)
        return self

    def transform(self, table: ColumnTable) -> np.ndarray:
        if not hasattr(self, "transformers_"):
            raise NotFittedError("RegionPreprocessor is not fitted")
        columns = []
        for name in self.feature_names_:
            mask = table.missing_mask(name)
            raw = np.where(mask, self.fill_values_[name], table.values(name))
            columns.append(self.transformers_[name].transform(raw))
        if not columns:
            return np.empty((table.n_rows, 0), dtype=np.float64)
        X = np.column_stack(columns)
        if X.size and not (np.all(np.isfinite(X))
                           and X.min() >= 0.0 and X.max() <= 1.0):
            raise AssertionError("feature matrix escaped [0, 1]")
        return X

    def to_json(self) -> str:
        payload = {
            "spec_version": 1,
            "central_mass": self.central_mass,
            "features": [
                {
                    "name": name,
                    "kind": (CONTINUOUS
                             if isinstance(self.transformers_[name], RankNormalizer)
                             else CATEGORICAL),
                    "fill": self.fill_values_[name],
                    "model": self.transformers_[name].to_dict(),
                }
                for name in self.feature_names_
            ],
            "dropped": self.dropped_columns_,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RegionPreprocessor":
        payload = json.loads(text)
        prep = cls(central_mass=payload["central_mass"])
        prep.feature_names_ = []
        prep.dropped_columns_ = list(payload["dropped"])
        prep.transformers_ = {}
        prep.fill_values_ = {}
        for entry in payload["features"]:
            name = entry["name"]
            if entry["kind"] == CONTINUOUS:
                model = RankNormalizer.from_dict(entry["model"])
            else:
                model = FrequencyLabelEncoder.from_dict(entry["model"])
            prep.transformers_[name] = model
            prep.fill_values_[name] = entry["fill"]
            prep.feature_names_.append(name)
        return prep
