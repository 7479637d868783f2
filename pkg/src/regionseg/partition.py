"""Disjoint row regions keyed by the availability pattern of split variables.

With m split variables there are exactly 2^m region slots. Region numbering
is a stable labeling convention: slots are ordered by descending binary
value of the availability bits, so the all-present region is region 1 and
the all-absent region is region 2^m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ColumnTable

SHARE_ATOL = 1e-9

#: Regions grow as 2^m; refuse configurations past this many split variables.
MAX_SPLIT_VARIABLES = 5


@dataclass(frozen=True)
class RegionKey:
    """One availability bit per split variable (True = value present)."""

    bits: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @property
    def label(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def from_label(cls, label: str) -> "RegionKey":
        if not label or any(ch not in "01" for ch in label):
            raise ValueError(f"region key label must be over {{0,1}}: {label!r}")
        return cls(tuple(ch == "1" for ch in label))


def region_index(key: RegionKey) -> int:
    """1-based region number under the descending-binary convention."""
    value = 0
    for bit in key.bits:
        value = (value << 1) | int(bit)
    return (1 << len(key.bits)) - value


@dataclass(frozen=True)
class Region:
    key: RegionKey
    index: int
    row_indices: np.ndarray
    share: float

    @property
    def n_rows(self) -> int:
        return int(self.row_indices.size)


@dataclass(frozen=True)
class RegionPartition:
    """All 2^m region slots, ordered by region index; empty slots retained."""

    split_variables: tuple[str, ...]
    regions: tuple[Region, ...]
    n_rows: int

    def region(self, index: int) -> Region:
        for r in self.regions:
            if r.index == index:
                return r
        raise KeyError(f"no region with index {index}")

    def by_key(self, key: RegionKey) -> Region:
        for r in self.regions:
            if r.key == key:
                return r
        raise KeyError(f"no region with key {key.label}")

    def validate(self):
        if not self.n_rows:
            return
        counted = np.zeros(self.n_rows, dtype=np.int64)
        for r in self.regions:
            counted[r.row_indices] += 1
        if not np.all(counted == 1):
            raise AssertionError("regions do not form a disjoint cover")
        total = sum(r.share for r in self.regions)
        if abs(total - 1.0) > SHARE_ATOL:
            raise AssertionError(f"region shares sum to {total!r}, not 1")


def region_key(table: ColumnTable, row: int, split_vars) -> RegionKey:
    """Availability bits of one row over the split variables, in order."""
    split_vars = list(split_vars)
    if not split_vars:
        raise ValueError("split_vars must be non-empty")
    if not 0 <= row < table.n_rows:
        raise IndexError(f"row {row} out of range for {table.n_rows} rows")
    return RegionKey(tuple(
        not bool(table.missing_mask(name)[row]) for name in split_vars))


def partition_regions(
    table: ColumnTable,
    split_vars,
    max_split_vars: int = MAX_SPLIT_VARIABLES,
) -> RegionPartition:
    """Group rows by availability pattern over the split variables.

    Every one of the 2^m keys gets a slot even when no rows match it.
    """
    split_vars = list(split_vars)
    if not split_vars:
        raise ValueError("split_vars must be non-empty")
    if len(split_vars) > max_split_vars:
        raise ValueError(
            f"{len(split_vars)} split variables would create "
            f"{2 ** len(split_vars)} regions; the cap is {max_split_vars}")
    for name in split_vars:
        table.missing_mask(name)  # raises KeyError for unknown columns

    m = len(split_vars)
    n = table.n_rows
    # Pattern value per row: MSB = first split variable.
    pattern = np.zeros(n, dtype=np.int64)
    for name in split_vars:
        present = ~table.missing_mask(name)
        pattern = (pattern << 1) | present.astype(np.int64)

    regions = []
    for idx in range(1, (1 << m) + 1):
        value = (1 << m) - idx
        bits = tuple(bool((value >> (m - 1 - j)) & 1) for j in range(m))
        rows = np.flatnonzero(pattern == value)
        share = rows.size / n if n else 0.0
        regions.append(Region(RegionKey(bits), idx, rows, share))
    part = RegionPartition(tuple(split_vars), tuple(regions), n)
    part.validate()
    return part


def partition_summary(part: RegionPartition) -> list[dict]:
    """JSON-ready per-region summary: key, row count, global share."""
    return [
        {"region": r.index, "key": r.key.label,
         "rows": r.n_rows, "global_share": r.share}
        for r in part.regions
    ]
