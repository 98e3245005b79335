"""Seeded MCAR corruption and cross-validation fold assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import make_rng
from .tabular import MixedTable

__all__ = ["MissSpec", "FoldAssignment", "inject_mcar", "assign_folds"]


@dataclass(frozen=True)
class MissSpec:
    """Univariate missing rate plus the seed that fixes the pattern."""

    rate: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.rate < 1.0:
            raise ValueError(f"rate must be in (0, 1), got {self.rate}")


@dataclass(frozen=True)
class FoldAssignment:
    n_rows: int
    k: int
    assignment: np.ndarray

    def fold_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def inject_mcar(
    table: MixedTable, spec: MissSpec, exclude=()
) -> tuple[MixedTable, np.ndarray]:
    """Remove exactly round(rate * n_rows) cells per column, uniformly.

    Columns are corrupted independently; columns named in `exclude` are
    left fully observed. The input must be complete. Returns the corrupted
    table and its observation mask (1 = observed). Deterministic for a
    given (table shape, spec).
    """
    if not table.is_complete:
        raise ValueError("inject_mcar requires a complete table")
    n = table.n_rows
    count = int(round(spec.rate * n))
    rng = make_rng(spec.seed, "mcar")
    skip = {table.schema.index_of(name) for name in exclude}
    values = table.values.copy()
    mask = np.ones_like(values, dtype=np.int8)
    for j in range(table.n_cols):
        if j in skip:
            continue
        rows = rng.choice(n, size=count, replace=False)
        values[rows, j] = np.nan
        mask[rows, j] = 0
    return table.with_values(values), mask


def assign_folds(n_rows: int, k: int, seed: int) -> FoldAssignment:
    """Seeded uniform shuffle followed by a round-robin split into k folds."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n_rows < k:
        raise ValueError(f"cannot split {n_rows} rows into {k} folds")
    rng = make_rng(seed, "folds")
    order = rng.permutation(n_rows)
    assignment = np.empty(n_rows, dtype=int)
    assignment[order] = np.arange(n_rows) % k
    return FoldAssignment(n_rows, k, assignment)
