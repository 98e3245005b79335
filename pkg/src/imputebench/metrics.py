"""Scoring: normalized RMSE, rank-based AUROC with tie handling, and F1."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import rankdata

from .tabular import MixedTable, NormParams, normalize

__all__ = [
    "UndefinedMetricError",
    "normalized_rmse",
    "auroc",
    "categorical_auroc",
    "f1",
]


class UndefinedMetricError(ValueError):
    """The metric has no value on the given inputs (e.g. empty cell set)."""


def normalized_rmse(
    truth: MixedTable, imputed: MixedTable, mask: np.ndarray, params: NormParams
) -> float:
    """RMSE over originally-missing numerical cells, in min-max units.

    Both tables are normalized with `params` first, so the score is
    comparable across columns with different physical ranges.
    """
    mask = np.asarray(mask)
    t = normalize(truth, params).values
    p = normalize(imputed, params).values
    idx = truth.schema.numerical_indices
    sel = mask[:, idx] == 0
    if not sel.any():
        raise UndefinedMetricError("no missing numerical cells to score")
    diff = (t[:, idx] - p[:, idx])[sel]
    return float(np.sqrt(np.mean(diff**2)))


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC: P(score_pos > score_neg), ties half-credited."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs both classes present")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def categorical_auroc(
    truth: MixedTable,
    scores: np.ndarray,
    mask: np.ndarray,
    average: str = "macro",
) -> tuple[float, dict[str, float]]:
    """AUROC of imputation scores over missing categorical cells.

    macro: mean of per-column AUROCs across columns with both classes
    among their missing cells. micro: pool all missing categorical cells
    into one score/label vector. Returns (average, per-column breakdown).
    """
    if average not in ("macro", "micro"):
        raise ValueError(f"unknown averaging mode {average!r}")
    mask = np.asarray(mask)
    scores = np.asarray(scores, dtype=float)
    per_column: dict[str, float] = {}
    pooled_scores, pooled_labels = [], []
    any_missing = False
    for j in truth.schema.categorical_indices:
        rows = mask[:, j] == 0
        if not rows.any():
            continue
        any_missing = True
        y = truth.values[rows, j]
        s = scores[rows, j]
        pooled_scores.append(s)
        pooled_labels.append(y)
        try:
            per_column[truth.schema.columns[j].name] = auroc(s, y)
        except UndefinedMetricError:
            continue  # single-class column: excluded from the macro mean
    if not any_missing:
        raise UndefinedMetricError("no missing categorical cells to score")
    if average == "macro":
        if not per_column:
            raise UndefinedMetricError(
                "every categorical column is single-class among missing cells"
            )
        value = float(np.mean(list(per_column.values())))
    else:
        value = auroc(np.concatenate(pooled_scores), np.concatenate(pooled_labels))
    return value, per_column


def safe_categorical_auroc(truth, scores, mask, average="macro") -> float:
    """Aggregate-reporter variant: substitutes 0.5 when undefined."""
    try:
        value, _ = categorical_auroc(truth, scores, mask, average)
        return value
    except UndefinedMetricError as exc:
        warnings.warn(f"AUROC undefined ({exc}); reporting 0.5", stacklevel=2)
        return 0.5


def f1(predictions, labels) -> float:
    """F1 of the positive class; 0 when there are no positives anywhere."""
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape or p.size == 0:
        raise ValueError("predictions and labels must be equal-length, nonempty")
    tp = float(np.sum((p == 1) & (y == 1)))
    fp = float(np.sum((p == 1) & (y == 0)))
    fn = float(np.sum((p == 0) & (y == 1)))
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom
