"""Mixed-type tables with explicit missingness, min-max scaling, and CSV I/O.

Tables are rectangular grids of numerical and binary-categorical columns.
Cells are stored in a single float matrix where NaN marks a missing value,
so every imputation method consumes the same representation. Categorical
cells are restricted to {0, 1}.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ColumnKind",
    "Column",
    "Schema",
    "MixedTable",
    "NormParams",
    "SchemaError",
    "ParseError",
    "EmptySubsetError",
    "FRAMINGHAM_SCHEMA",
    "load_csv",
    "load_schema",
    "save_schema",
    "complete_subset",
    "fit_normalizer",
    "normalize",
    "denormalize",
    "combine_imputed",
    "clip_to_fitted",
]


class SchemaError(ValueError):
    """A table or file violates its declared schema."""


class ParseError(ValueError):
    """A CSV cell could not be parsed; message names row and column."""


class EmptySubsetError(ValueError):
    """Filtering left zero rows."""


class ColumnKind(Enum):
    NUMERICAL = "numerical"
    CATEGORICAL_BINARY = "categorical"


@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind


class Schema:
    """Ordered column declarations plus an optional binary label column."""

    def __init__(self, columns, label: str | None = None):
        columns = tuple(columns)
        if not columns:
            raise SchemaError("schema must have at least one column")
        names = [c.name for c in columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        if label is not None and label not in names:
            raise SchemaError(f"label column {label!r} not in schema")
        self.columns = columns
        self.label = label

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def index_of(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise SchemaError(f"no column named {name!r}")

    @property
    def numerical_indices(self) -> np.ndarray:
        return np.array(
            [i for i, c in enumerate(self.columns) if c.kind is ColumnKind.NUMERICAL],
            dtype=int,
        )

    @property
    def categorical_indices(self) -> np.ndarray:
        return np.array(
            [i for i, c in enumerate(self.columns) if c.kind is ColumnKind.CATEGORICAL_BINARY],
            dtype=int,
        )

    @property
    def label_index(self) -> int | None:
        return None if self.label is None else self.index_of(self.label)

    def __eq__(self, other):
        return (
            isinstance(other, Schema)
            and self.columns == other.columns
            and self.label == other.label
        )

    def __repr__(self):
        return f"Schema({list(self.columns)!r}, label={self.label!r})"


def _num(name):
    return Column(name, ColumnKind.NUMERICAL)


def _cat(name):
    return Column(name, ColumnKind.CATEGORICAL_BINARY)


# The 15-feature heart-study schema: 8 numerical, 7 binary categorical,
# with CVD as the prediction label.
FRAMINGHAM_SCHEMA = Schema(
    [
        _cat("Sex"),
        _num("Totchol"),
        _num("Age"),
        _num("SysBP"),
        _cat("Cursmoke"),
        _num("Cigpday"),
        _num("Bmi"),
        _cat("Diabetes"),
        _cat("Bpmeds"),
        _num("Heartrate"),
        _num("Glucose"),
        _cat("Prevhyp"),
        _cat("Prevstrk"),
        _num("DiaBP"),
        _cat("CVD"),
    ],
    label="CVD",
)


class MixedTable:
    """Immutable mixed-type table. NaN entries are missing cells."""

    def __init__(self, schema: Schema, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != schema.n_cols:
            raise SchemaError(
                f"values shape {values.shape} incompatible with "
                f"{schema.n_cols}-column schema"
            )
        cat = schema.categorical_indices
        if cat.size:
            block = values[:, cat]
            bad = ~(np.isnan(block) | (block == 0.0) | (block == 1.0))
            if bad.any():
                i, j = np.argwhere(bad)[0]
                name = schema.columns[cat[j]].name
                raise SchemaError(
                    f"categorical column {name!r} has non-binary value "
                    f"{block[i, j]!r} at row {i}"
                )
        values = values.copy()
        values.flags.writeable = False
        self.schema = schema
        self.values = values

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def mask(self) -> np.ndarray:
        """Observation mask: 1 where a cell is present, 0 where missing."""
        return (~np.isnan(self.values)).astype(np.int8)

    @property
    def is_complete(self) -> bool:
        return not np.isnan(self.values).any()

    def with_values(self, values: np.ndarray) -> "MixedTable":
        return MixedTable(self.schema, values)

    def take(self, rows) -> "MixedTable":
        return MixedTable(self.schema, self.values[np.asarray(rows, dtype=int)])

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.schema.index_of(name)]

    def __eq__(self, other):
        return (
            isinstance(other, MixedTable)
            and self.schema == other.schema
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


@dataclass(frozen=True)
class NormParams:
    """Per-numerical-column observed min/max. Constant columns map to 0."""

    numerical_indices: np.ndarray
    col_min: np.ndarray
    col_max: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.col_max == self.col_min

    @property
    def span(self) -> np.ndarray:
        return np.where(self.constant, 1.0, self.col_max - self.col_min)


def load_schema(path) -> Schema:
    """Read a schema file: JSON with a column list and label designation."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    kinds = {k.value: k for k in ColumnKind}
    try:
        columns = [Column(c["name"], kinds[c["kind"]]) for c in doc["columns"]]
    except KeyError as exc:
        raise SchemaError(f"bad schema file {path}: {exc}") from exc
    return Schema(columns, label=doc.get("label"))


def save_schema(schema: Schema, path) -> None:
    doc = {
        "columns": [{"name": c.name, "kind": c.kind.value} for c in schema.columns],
        "label": schema.label,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_csv(path, schema: Schema, missing_token: str = "") -> MixedTable:
    """Parse a UTF-8 comma-separated file into a MixedTable.

    The header must contain every schema column (order-insensitive; extra
    columns are ignored). Empty fields, or the configured missing token,
    denote missing cells.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        positions = []
        for name in schema.names:
            if name not in header:
                raise SchemaError(f"{path}: missing column {name!r}")
            positions.append(header.index(name))
        rows = []
        for r, record in enumerate(reader):
            out = np.empty(schema.n_cols)
            for j, pos in enumerate(positions):
                field = record[pos].strip() if pos < len(record) else ""
                if field == "" or field == missing_token:
                    out[j] = np.nan
                    continue
                try:
                    out[j] = float(field)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {r + 1}, column "
                        f"{schema.columns[j].name!r}: cannot parse {field!r}"
                    ) from None
            rows.append(out)
    values = np.array(rows).reshape(len(rows), schema.n_cols)
    return MixedTable(schema, values)


def save_csv(table: MixedTable, path, missing_token: str = "") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.schema.names)
        for row in table.values:
            writer.writerow(
                [missing_token if np.isnan(v) else f"{v:.12g}" for v in row]
            )


def complete_subset(table: MixedTable) -> MixedTable:
    """Rows with no missing cells, original order preserved."""
    keep = ~np.isnan(table.values).any(axis=1)
    if not keep.any():
        raise EmptySubsetError("no complete rows in table")
    return table.with_values(table.values[keep])


def fit_normalizer(table: MixedTable) -> NormParams:
    """Observed min/max per numerical column (ignores missing cells)."""
    idx = table.schema.numerical_indices
    mins = np.empty(idx.size)
    maxs = np.empty(idx.size)
    for i, j in enumerate(idx):
        col = table.values[:, j]
        observed = col[~np.isnan(col)]
        if observed.size == 0:
            raise EmptySubsetError(
                f"column {table.schema.columns[j].name!r} has no observed cells"
            )
        mins[i] = observed.min()
        maxs[i] = observed.max()
    return NormParams(idx.copy(), mins, maxs)


def normalize(table: MixedTable, params: NormParams) -> MixedTable:
    """Map numerical columns affinely onto [0, 1]; no clipping applied."""
    values = table.values.copy()
    idx = params.numerical_indices
    values[:, idx] = (values[:, idx] - params.col_min) / params.span
    values[:, idx[params.constant]] = np.where(
        np.isnan(values[:, idx[params.constant]]), np.nan, 0.0
    )
    return table.with_values(values)


def denormalize(table: MixedTable, params: NormParams) -> MixedTable:
    values = table.values.copy()
    idx = params.numerical_indices
    values[:, idx] = values[:, idx] * params.span + params.col_min
    values[:, idx[params.constant]] = np.where(
        np.isnan(values[:, idx[params.constant]]),
        np.nan,
        params.col_min[params.constant],
    )
    return table.with_values(values)


def clip_to_fitted(table: MixedTable, params: NormParams) -> MixedTable:
    """Clip numerical cells to the fitted [min, max] range (data units)."""
    values = table.values.copy()
    idx = params.numerical_indices
    values[:, idx] = np.clip(values[:, idx], params.col_min, params.col_max)
    return table.with_values(values)


def _check_mask(table: MixedTable, mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.shape != table.values.shape:
        raise SchemaError(
            f"mask shape {mask.shape} does not match table {table.values.shape}"
        )
    return mask


def combine_imputed(
    original: MixedTable, mask: np.ndarray, model_output: MixedTable
) -> MixedTable:
    """Keep observed cells from the original, fill the rest from the model.

    Cell (i, j) takes the original value where mask is 1 and the model
    output where mask is 0; the result is complete.
    """
    mask = _check_mask(original, mask)
    out = np.asarray(model_output.values)
    if np.isnan(out[mask == 0]).any():
        raise ValueError("model output is missing values at masked cells")
    combined = np.where(mask == 1, original.values, out)
    return original.with_values(combined)
