import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regionseg.dataset import (
    CATEGORICAL,
    CONTINUOUS,
    ColumnSpec,
    ColumnTable,
    ParseError,
    SchemaError,
    TableSchema,
    availability_mask,
    load_schema,
    parse_table,
    schema_to_json,
    select_rows,
    write_csv,
)

TWO_COL = TableSchema((
    ColumnSpec("age", CONTINUOUS),
    ColumnSpec("sex", CATEGORICAL),
))


def test_parse_empty_field_is_missing():
    table = parse_table("age,sex\n30,M\n,F\n", TWO_COL)
    assert table.n_rows == 2
    assert table.missing_mask("age").tolist() == [False, True]
    assert table.values("age")[0] == 30.0


def test_parse_na_sentinel_is_missing():
    table = parse_table("age,sex\n30,NA\n", TWO_COL)
    assert table.missing_mask("sex").tolist() == [True]


def test_parse_bad_number_names_row_and_column():
    with pytest.raises(ParseError) as err:
        parse_table("age,sex\nabc,M\n", TWO_COL)
    assert err.value.row == 1
    assert err.value.column == "age"


def test_parse_rejects_non_finite_numbers():
    with pytest.raises(ParseError):
        parse_table("age,sex\ninf,M\n", TWO_COL)


def test_parse_header_missing_schema_column():
    with pytest.raises(SchemaError):
        parse_table("age\n30\n", TWO_COL)


def test_parse_ignores_extra_csv_columns():
    table = parse_table("extra,age,sex\nzzz,30,M\n", TWO_COL)
    assert table.n_rows == 1
    assert table.values("sex")[0] == "M"


def test_availability_mask_is_negated_missing():
    table = parse_table("age,sex\n30,M\n,F\n5,\n", TWO_COL)
    assert availability_mask(table, "age").tolist() == [True, False, True]
    assert availability_mask(table, "sex").tolist() == [True, True, False]


def test_availability_mask_unknown_column():
    table = parse_table("age,sex\n30,M\n", TWO_COL)
    with pytest.raises(KeyError):
        availability_mask(table, "nope")


def test_select_rows_identity_and_empty():
    table = parse_table("age,sex\n30,M\n,F\n5,\n", TWO_COL)
    same = select_rows(table, [True, True, True])
    assert same == table
    empty = select_rows(table, [False, False, False])
    assert empty.n_rows == 0
    assert empty.schema == table.schema


def test_select_rows_keeps_order():
    table = parse_table("age,sex\n1,a\n2,b\n3,c\n", TWO_COL)
    picked = select_rows(table, [True, False, True])
    assert picked.values("age").tolist() == [1.0, 3.0]
    assert picked.values("sex").tolist() == ["a", "c"]


def test_select_rows_length_mismatch():
    table = parse_table("age,sex\n30,M\n", TWO_COL)
    with pytest.raises(ValueError):
        select_rows(table, [True, False])


def test_schema_rejects_duplicate_names():
    with pytest.raises(SchemaError):
        TableSchema((ColumnSpec("a", CONTINUOUS), ColumnSpec("a", CATEGORICAL)))


def test_schema_needs_a_non_split_column():
    with pytest.raises(SchemaError):
        TableSchema((ColumnSpec("a", CONTINUOUS, split_variable=True),))


def test_schema_json_round_trip():
    schema = TableSchema((
        ColumnSpec("x", CONTINUOUS, split_variable=True),
        ColumnSpec("y", CATEGORICAL),
    ))
    assert load_schema(schema_to_json(schema)) == schema


def test_tables_are_immutable():
    table = parse_table("age,sex\n30,M\n", TWO_COL)
    with pytest.raises(ValueError):
        table.values("age")[0] = 1.0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 30))
def test_csv_round_trip(seed, n_rows):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=n_rows) * rng.choice([1e-6, 1.0, 1e8])
    miss_a = rng.random(n_rows) < 0.3
    labels = rng.choice(["red", "green", "blue_ish"], size=n_rows)
    miss_b = rng.random(n_rows) < 0.3
    table = ColumnTable(
        TWO_COL,
        {"age": values, "sex": labels.astype(object)},
        {"age": miss_a, "sex": miss_b},
    )
    again = parse_table(write_csv(table), TWO_COL)
    assert again == table


def test_select_rows_count_matches_mask(rng):
    n = 25
    table = ColumnTable(
        TWO_COL,
        {"age": rng.normal(size=n), "sex": np.array(["x"] * n, dtype=object)},
        {"age": np.zeros(n, bool), "sex": np.zeros(n, bool)},
    )
    keep = rng.random(n) < 0.4
    assert select_rows(table, keep).n_rows == int(keep.sum())
