import numpy as np
import pytest

from imputebench.tabular import Column, ColumnKind, MixedTable, Schema


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def mixed_schema(n_num=3, n_cat=2, label=None):
    cols = [Column(f"n{i}", ColumnKind.NUMERICAL) for i in range(n_num)]
    cols += [Column(f"c{i}", ColumnKind.CATEGORICAL_BINARY) for i in range(n_cat)]
    return Schema(cols, label=label)


def random_table(schema, n_rows, seed, missing_rate=0.0):
    rng = make_rng(seed)
    values = np.empty((n_rows, schema.n_cols))
    for j, col in enumerate(schema.columns):
        if col.kind is ColumnKind.NUMERICAL:
            values[:, j] = rng.uniform(-5.0, 20.0, n_rows)
        else:
            values[:, j] = rng.integers(0, 2, n_rows).astype(float)
    if missing_rate > 0:
        holes = rng.random(values.shape) < missing_rate
        # keep at least one observed cell per column
        for j in range(values.shape[1]):
            if holes[:, j].all():
                holes[rng.integers(0, n_rows), j] = False
        values[holes] = np.nan
    return MixedTable(schema, values)


@pytest.fixture
def rng():
    return make_rng(1234)
