import numpy as np
import pytest

from regionseg.dataset import CATEGORICAL, CONTINUOUS, ColumnSpec, ColumnTable, TableSchema
from regionseg.partition import (
    RegionKey,
    partition_regions,
    partition_summary,
    region_index,
    region_key,
)

SCHEMA = TableSchema((
    ColumnSpec("favorite_activity", CATEGORICAL, split_variable=True),
    ColumnSpec("avg_accesses", CONTINUOUS, split_variable=True),
    ColumnSpec("avg_app_accesses", CONTINUOUS, split_variable=True),
    ColumnSpec("age", CONTINUOUS),
))

SPLIT = ["favorite_activity", "avg_accesses", "avg_app_accesses"]


def make_table(missing_rows: dict[str, list[bool]]) -> ColumnTable:
    n = len(next(iter(missing_rows.values())))
    cols = {}
    miss = {}
    for spec in SCHEMA.columns:
        mask = np.array(missing_rows.get(spec.name, [False] * n))
        if spec.kind == CONTINUOUS:
            cols[spec.name] = np.where(mask, np.nan, 1.0)
        else:
            cols[spec.name] = np.where(mask, "", "yoga").astype(object)
        miss[spec.name] = mask
    return ColumnTable(SCHEMA, cols, miss)


def random_table(rng, n) -> ColumnTable:
    return make_table({
        name: (rng.random(n) < rng.random()).tolist() for name in SPLIT
    })


def test_region_key_mixed_pattern():
    table = make_table({
        "favorite_activity": [False],
        "avg_accesses": [True],
        "avg_app_accesses": [False],
    })
    assert region_key(table, 0, SPLIT).bits == (True, False, True)


def test_region_key_all_present_and_all_missing():
    table = make_table({
        "favorite_activity": [False, True],
        "avg_accesses": [False, True],
        "avg_app_accesses": [False, True],
    })
    assert region_key(table, 0, SPLIT).bits == (True, True, True)
    assert region_key(table, 1, SPLIT).bits == (False, False, False)


def test_region_key_unknown_variable():
    table = make_table({"favorite_activity": [False]})
    with pytest.raises(KeyError):
        region_key(table, 0, ["nope"])


def test_region_numbering_convention():
    assert region_index(RegionKey((True, True, True))) == 1
    assert region_index(RegionKey((True, True, False))) == 2
    assert region_index(RegionKey((False, False, True))) == 7
    assert region_index(RegionKey((False, False, False))) == 8


def test_three_split_variables_give_eight_slots(rng):
    part = partition_regions(random_table(rng, 50), SPLIT)
    assert len(part.regions) == 8
    assert [r.index for r in part.regions] == list(range(1, 9))


def test_fully_available_corpus_lands_in_region_one():
    table = make_table({name: [False] * 10 for name in SPLIT})
    part = partition_regions(table, SPLIT)
    assert part.region(1).n_rows == 10
    assert all(part.region(i).n_rows == 0 for i in range(2, 9))
    assert part.region(1).share == 1.0


def test_half_and_half_shares():
    table = make_table({name: [False] * 3 + [True] * 3 for name in SPLIT})
    part = partition_regions(table, SPLIT)
    assert part.region(1).share == pytest.approx(0.5)
    assert part.region(8).share == pytest.approx(0.5)
    assert part.region(1).row_indices.tolist() == [0, 1, 2]
    assert part.region(8).row_indices.tolist() == [3, 4, 5]


def test_disjoint_cover_and_share_sum_on_random_corpora():
    rng = np.random.default_rng(5)
    for _ in range(50):
        part = partition_regions(random_table(rng, int(rng.integers(1, 60))),
                                 SPLIT)
        part.validate()
        total = sum(r.share for r in part.regions)
        assert total == pytest.approx(1.0, abs=1e-9)


def test_row_permutation_equivariance(rng):
    table = random_table(rng, 40)
    part = partition_regions(table, SPLIT)
    perm = rng.permutation(40)
    inverse = np.empty(40, dtype=int)
    inverse[perm] = np.arange(40)
    from regionseg.dataset import take_rows
    permuted = partition_regions(take_rows(table, perm), SPLIT)
    for r in part.regions:
        r2 = permuted.by_key(r.key)
        assert sorted(inverse[r.row_indices].tolist()) == sorted(
            r2.row_indices.tolist())


def test_split_variable_cap():
    schema = TableSchema(
        tuple(ColumnSpec(f"s{i}", CONTINUOUS, split_variable=True)
              for i in range(6)) + (ColumnSpec("x", CONTINUOUS),))
    cols = {c.name: np.ones(3) for c in schema.columns}
    miss = {c.name: np.zeros(3, bool) for c in schema.columns}
    table = ColumnTable(schema, cols, miss)
    with pytest.raises(ValueError):
        partition_regions(table, [f"s{i}" for i in range(6)])


def test_partition_summary_is_json_ready(rng):
    part = partition_regions(random_table(rng, 20), SPLIT)
    summary = partition_summary(part)
    assert len(summary) == 8
    assert {"region", "key", "rows", "global_share"} == set(summary[0])
