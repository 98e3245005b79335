import numpy as np
import pytest

from imputebench.tabular import (
    FRAMINGHAM_SCHEMA,
    Column,
    ColumnKind,
    EmptySubsetError,
    MixedTable,
    ParseError,
    Schema,
    SchemaError,
    combine_imputed,
    complete_subset,
    denormalize,
    fit_normalizer,
    load_csv,
    load_schema,
    normalize,
    save_csv,
    save_schema,
)

from conftest import make_rng, mixed_schema, random_table


def test_framingham_schema_shape():
    assert len(FRAMINGHAM_SCHEMA.columns) == 15
    assert FRAMINGHAM_SCHEMA.numerical_indices.size == 8
    assert FRAMINGHAM_SCHEMA.categorical_indices.size == 7
    assert FRAMINGHAM_SCHEMA.label == "CVD"


def test_schema_rejects_duplicates_and_empty():
    with pytest.raises(SchemaError):
        Schema([Column("a", ColumnKind.NUMERICAL), Column("a", ColumnKind.NUMERICAL)])
    with pytest.raises(SchemaError):
        Schema([])
    with pytest.raises(SchemaError):
        Schema([Column("a", ColumnKind.NUMERICAL)], label="missing")


def test_table_rejects_non_binary_categorical():
    schema = mixed_schema(1, 1)
    with pytest.raises(SchemaError):
        MixedTable(schema, np.array([[1.0, 2.0]]))


def test_table_mask_matches_missing():
    t = random_table(mixed_schema(), 30, seed=5, missing_rate=0.3)
    mask = t.mask()
    assert np.array_equal(mask == 0, np.isnan(t.values))


def test_load_csv_one_missing_cell(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("Glucose,Sex\n100,1\n,0\n90,1\n")
    schema = Schema([Column("Glucose", ColumnKind.NUMERICAL), Column("Sex", ColumnKind.CATEGORICAL_BINARY)])
    t = load_csv(path, schema)
    assert t.n_rows == 3
    assert np.isnan(t.column("Glucose")).sum() == 1
    assert np.isnan(t.values).sum() == 1


def test_load_csv_errors(tmp_path):
    schema = Schema([Column("Glucose", ColumnKind.NUMERICAL), Column("Sex", ColumnKind.CATEGORICAL_BINARY)])
    bad_cat = tmp_path / "cat.csv"
    bad_cat.write_text("Glucose,Sex\n100,2\n")
    with pytest.raises(SchemaError):
        load_csv(bad_cat, schema)
    bad_num = tmp_path / "num.csv"
    bad_num.write_text("Glucose,Sex\nabc,1\n")
    with pytest.raises(ParseError, match="Glucose"):
        load_csv(bad_num, schema)
    missing_col = tmp_path / "col.csv"
    missing_col.write_text("Glucose\n100\n")
    with pytest.raises(SchemaError, match="Sex"):
        load_csv(missing_col, schema)


def test_csv_round_trip(tmp_path):
    t = random_table(mixed_schema(), 20, seed=9, missing_rate=0.2)
    path = tmp_path / "t.csv"
    save_csv(t, path)
    back = load_csv(path, t.schema)
    assert np.allclose(back.values, t.values, equal_nan=True)


def test_schema_file_round_trip(tmp_path):
    path = tmp_path / "schema.json"
    save_schema(FRAMINGHAM_SCHEMA, path)
    assert load_schema(path) == FRAMINGHAM_SCHEMA


def test_complete_subset_identity_and_filter():
    full = random_table(mixed_schema(), 10, seed=3)
    assert complete_subset(full) == full

    values = full.values.copy()
    values[1, 0] = np.nan
    values[3, 2] = np.nan
    holes = full.with_values(values)
    sub = complete_subset(holes)
    assert sub.n_rows == 8
    assert np.array_equal(sub.values, values[[0, 2, 4, 5, 6, 7, 8, 9]])


def test_complete_subset_idempotent_and_empty():
    t = random_table(mixed_schema(), 12, seed=4, missing_rate=0.4)
    sub = complete_subset(t)
    assert complete_subset(sub) == sub
    all_missing = t.with_values(np.full_like(t.values, np.nan))
    with pytest.raises(EmptySubsetError):
        complete_subset(all_missing)


def test_normalize_endpoints_and_midpoint():
    schema = Schema([Column("x", ColumnKind.NUMERICAL)])
    t = MixedTable(schema, np.array([[100.0], [150.0], [200.0]]))
    params = fit_normalizer(t)
    normed = normalize(t, params)
    assert np.allclose(normed.values.ravel(), [0.0, 0.5, 1.0])


def test_normalize_preserves_categoricals_and_missingness():
    t = random_table(mixed_schema(), 40, seed=7, missing_rate=0.25)
    params = fit_normalizer(t)
    normed = normalize(t, params)
    cat = t.schema.categorical_indices
    assert np.array_equal(normed.values[:, cat], t.values[:, cat], equal_nan=True)
    assert np.array_equal(np.isnan(normed.values), np.isnan(t.values))


def test_normalize_round_trip_oracle():
    # 1000 random cells across repeated draws
    total = 0
    for seed in range(10):
        t = random_table(mixed_schema(5, 0), 20, seed=seed)
        params = fit_normalizer(t)
        back = denormalize(normalize(t, params), params)
        assert np.max(np.abs(back.values - t.values)) < 1e-12
        total += t.values.size
    assert total >= 1000


def test_normalize_constant_column_maps_to_zero():
    schema = Schema([Column("x", ColumnKind.NUMERICAL)])
    t = MixedTable(schema, np.array([[7.0], [7.0], [np.nan]]))
    params = fit_normalizer(t)
    normed = normalize(t, params)
    assert normed.values[0, 0] == 0.0
    assert np.isnan(normed.values[2, 0])
    assert denormalize(normed, params).values[0, 0] == 7.0


def test_normalize_does_not_clip_out_of_range():
    schema = Schema([Column("x", ColumnKind.NUMERICAL)])
    fit_on = MixedTable(schema, np.array([[0.0], [10.0]]))
    params = fit_normalizer(fit_on)
    wild = MixedTable(schema, np.array([[20.0], [-10.0]]))
    normed = normalize(wild, params)
    assert normed.values[0, 0] == 2.0
    assert normed.values[1, 0] == -1.0


def test_combine_imputed_cases():
    schema = mixed_schema(2, 0)
    original = MixedTable(schema, np.array([[1.0, 2.0], [3.0, 4.0]]))
    output = MixedTable(schema, np.array([[9.0, 8.0], [7.0, 6.0]]))
    ones = np.ones((2, 2), dtype=int)
    assert combine_imputed(original, ones, output) == original
    assert combine_imputed(original, np.zeros_like(ones), output) == output
    diag = np.array([[1, 0], [0, 1]])
    combined = combine_imputed(original, diag, output)
    assert np.array_equal(combined.values, [[1.0, 8.0], [7.0, 4.0]])


def test_combine_imputed_random_property():
    rng = make_rng(2)
    schema = mixed_schema(3, 1)
    for _ in range(50):
        original = random_table(schema, 6, seed=int(rng.integers(1e9)))
        output = random_table(schema, 6, seed=int(rng.integers(1e9)))
        mask = rng.integers(0, 2, size=original.values.shape)
        combined = combine_imputed(original, mask, output)
        assert np.array_equal(combined.values[mask == 1], original.values[mask == 1])
        assert np.array_equal(combined.values[mask == 0], output.values[mask == 0])
        assert not np.isnan(combined.values).any()


def test_combine_imputed_incomplete_output_error():
    schema = mixed_schema(1, 0)
    original = MixedTable(schema, np.array([[1.0], [2.0]]))
    output = MixedTable(schema, np.array([[np.nan], [5.0]]))
    with pytest.raises(ValueError):
        combine_imputed(original, np.zeros((2, 1), dtype=int), output)
