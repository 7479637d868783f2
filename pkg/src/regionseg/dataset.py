"""Typed columnar tables with an explicit per-cell missing mask.

Storage is column-oriented because every downstream pass (statistics,
transforms, distances) walks one column at a time. The schema is
authoritative: continuous cells are finite floats, categorical cells are
text labels, and no coercion happens between the two.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"

#: Field contents treated as missing on ingestion (case-sensitive).
MISSING_SENTINELS = ("", "NA")


class SchemaError(ValueError):
    """Schema definition or header/schema mismatch problems."""


class ParseError(ValueError):
    """A cell could not be parsed; carries the offending row and column."""

    def __init__(self, message: str, row: int, column: str):
        super().__init__(message)
        self.row = row
        self.column = column


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    split_variable: bool = False

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise SchemaError(f"unknown column kind {self.kind!r}")
        if not self.name:
            raise SchemaError("column name must be non-empty")


@dataclass(frozen=True)
class TableSchema:
    """Ordered column specs; the order defines feature indexing downstream."""

    columns: tuple[ColumnSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique within a schema")
        if all(c.split_variable for c in self.columns):
            raise SchemaError("schema needs at least one non-split variable")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def split_variables(self) -> list[str]:
        return [c.name for c in self.columns if c.split_variable]

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(f"unknown column {name!r}")

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)


def load_schema(text_or_path) -> TableSchema:
    """Read a schema from a JSON document: a list of
    {"name", "kind", "split_variable"} objects."""
    if isinstance(text_or_path, str) and text_or_path.lstrip().startswith("["):
        raw = json.loads(text_or_path)
    else:
        with open(text_or_path, encoding="utf-8") as fh:
            raw = json.load(fh)
    if not isinstance(raw, list):
        raise SchemaError("schema JSON must be a list of column objects")
    cols = []
    for entry in raw:
        cols.append(ColumnSpec(
            name=entry["name"],
            kind=entry["kind"],
            split_variable=bool(entry.get("split_variable", False)),
        ))
    return TableSchema(tuple(cols))


def schema_to_json(schema: TableSchema) -> str:
    return json.dumps(
        [{"name": c.name, "kind": c.kind, "split_variable": c.split_variable}
         for c in schema.columns],
        indent=2,
    )


class ColumnTable:
    """Immutable columnar table with per-column value arrays and missing masks.

    Continuous columns are float64 arrays (NaN where missing); categorical
    columns are object arrays of str ("" where missing). The missing mask,
    not the placeholder value, is authoritative.
    """

    def __init__(self, schema: TableSchema, columns: dict, missing: dict):
        self.schema = schema
        n_rows = None
        self._columns: dict[str, np.ndarray] = {}
        self._missing: dict[str, np.ndarray] = {}
        for spec in schema.columns:
            if spec.name not in columns or spec.name not in missing:
                raise SchemaError(f"missing data for column {spec.name!r}")
            mask = np.asarray(missing[spec.name], dtype=bool)
            if spec.kind == CONTINUOUS:
                vals = np.asarray(columns[spec.name], dtype=np.float64)
                bad = ~mask & ~np.isfinite(vals)
                if np.any(bad):
                    raise ValueError(
                        f"column {spec.name!r} has non-finite non-missing cells")
            else:
                vals = np.asarray(columns[spec.name], dtype=object)
            if vals.shape != mask.shape or vals.ndim != 1:
                raise ValueError(f"column {spec.name!r}: shape mismatch")
            if n_rows is None:
                n_rows = vals.shape[0]
            elif vals.shape[0] != n_rows:
                raise ValueError(
                    f"column {spec.name!r} has {vals.shape[0]} rows, "
                    f"expected {n_rows}")
            vals = vals.copy()
            mask = mask.copy()
            vals.setflags(write=False)
            mask.setflags(write=False)
            self._columns[spec.name] = vals
            self._missing[spec.name] = mask
        self.n_rows = 0 if n_rows is None else int(n_rows)

    def values(self, name: str) -> np.ndarray:
        if name not in self._columns:
            raise KeyError(f"unknown column {name!r}")
        return self._columns[name]

    def missing_mask(self, name: str) -> np.ndarray:
        if name not in self._missing:
            raise KeyError(f"unknown column {name!r}")
        return self._missing[name]

    def non_missing_values(self, name: str) -> np.ndarray:
        return self.values(name)[~self.missing_mask(name)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ColumnTable):
            return NotImplemented
        if self.schema != other.schema or self.n_rows != other.n_rows:
            return False
        for spec in self.schema.columns:
            m1, m2 = self.missing_mask(spec.name), other.missing_mask(spec.name)
            if not np.array_equal(m1, m2):
                return False
            v1, v2 = self.values(spec.name), other.values(spec.name)
            keep = ~m1
            if spec.kind == CONTINUOUS:
                if not np.array_equal(v1[keep], v2[keep]):
                    return False
            else:
                if not all(a == b for a, b in zip(v1[keep], v2[keep])):
                    return False
        return True


def availability_mask(table: ColumnTable, column: str) -> np.ndarray:
    """Per-row True where the column has a value (negation of missing)."""
    return ~table.missing_mask(column)


def select_rows(table: ColumnTable, keep) -> ColumnTable:
    """Keep exactly the rows where `keep` is True, preserving order."""
    keep = np.asarray(keep, dtype=bool)
    if keep.shape != (table.n_rows,):
        raise ValueError(
            f"keep mask has shape {keep.shape}, expected ({table.n_rows},)")
    cols = {c.name: table.values(c.name)[keep] for c in table.schema.columns}
    miss = {c.name: table.missing_mask(c.name)[keep]
            for c in table.schema.columns}
    return ColumnTable(table.schema, cols, miss)


def take_rows(table: ColumnTable, indices) -> ColumnTable:
    """Row subset by integer index, preserving the given order."""
    idx = np.asarray(indices, dtype=np.intp)
    cols = {c.name: table.values(c.name)[idx] for c in table.schema.columns}
    miss = {c.name: table.missing_mask(c.name)[idx]
            for c in table.schema.columns}
    return ColumnTable(table.schema, cols, miss)


def parse_table(csv_text: str, schema: TableSchema) -> ColumnTable:
    """Parse CSV text (header row mandatory) against a schema.

    Header names must be a superset of the schema's; extra columns are
    ignored. Empty fields and the literal "NA" are missing. Continuous
    fields must parse as finite decimals; a bad cell raises ParseError
    naming the 1-based data row and the column.
    """
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("CSV input has no header row") from None
    positions = {}
    for spec in schema.columns:
        if spec.name not in header:
            raise SchemaError(f"CSV header is missing column {spec.name!r}")
        positions[spec.name] = header.index(spec.name)

    raw_cols: dict[str, list] = {c.name: [] for c in schema.columns}
    miss_cols: dict[str, list] = {c.name: [] for c in schema.columns}
    for row_no, record in enumerate(reader, start=1):
        if len(record) < len(header):
            raise ParseError(
                f"row {row_no} has {len(record)} fields, expected "
                f"{len(header)}", row=row_no, column="")
        for spec in schema.columns:
            cell = record[positions[spec.name]]
            if cell in MISSING_SENTINELS:
                miss_cols[spec.name].append(True)
                raw_cols[spec.name].append(
                    math.nan if spec.kind == CONTINUOUS else "")
                continue
            miss_cols[spec.name].append(False)
            if spec.kind == CONTINUOUS:
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"cannot parse {cell!r} as a number in row {row_no}, "
                        f"column {spec.name!r}",
                        row=row_no, column=spec.name) from None
                if not math.isfinite(value):
                    raise ParseError(
                        f"non-finite value {cell!r} in row {row_no}, "
                        f"column {spec.name!r}",
                        row=row_no, column=spec.name)
                raw_cols[spec.name].append(value)
            else:
                raw_cols[spec.name].append(cell)
    return ColumnTable(schema, raw_cols, miss_cols)


def write_csv(table: ColumnTable) -> str:
    """Serialize to CSV with missing cells as empty fields.

    Continuous values use shortest round-trip float formatting, so
    parse_table(write_csv(t), t.schema) reproduces t exactly. Categorical
    labels equal to a missing sentinel cannot survive the round trip.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.schema.names)
    cols = [table.values(c.name) for c in table.schema.columns]
    masks = [table.missing_mask(c.name) for c in table.schema.columns]
    kinds = [c.kind for c in table.schema.columns]
    for i in range(table.n_rows):
        record = []
        for vals, mask, kind in zip(cols, masks, kinds):
            if mask[i]:
                record.append("")
            elif kind == CONTINUOUS:
                record.append(repr(float(vals[i])))
            else:
                record.append(str(vals[i]))
        writer.writerow(record)
    return buf.getvalue()
