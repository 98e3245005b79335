"""Imputer registry: construct any of the seven methods by name."""

from __future__ import annotations

from .deep_imputers import DaeConfig, DaeImputer, GainConfig, GainImputer
from .imputers import Imputer, KnnImputer, MissForestImputer, SimpleImputer
from .tabular import Schema

__all__ = ["METHOD_NAMES", "make_imputer", "register_imputer"]


def _dae(variant):
    def factory(schema, seed, **overrides):
        return DaeImputer(schema, seed, DaeConfig(variant=variant), **overrides)

    return factory


def _gain(variant):
    def factory(schema, seed, **overrides):
        return GainImputer(schema, seed, GainConfig(variant=variant), **overrides)

    return factory


_FACTORIES = {
    "simple": lambda schema, seed, **kw: SimpleImputer(schema, seed, **kw),
    "knn": lambda schema, seed, **kw: KnnImputer(schema, seed, **kw),
    "missforest": lambda schema, seed, **kw: MissForestImputer(schema, seed, **kw),
    "naa": _dae("naa"),
    "inaa": _dae("inaa"),
    "gain": _gain("gain"),
    "igain": _gain("igain"),
}

METHOD_NAMES = tuple(_FACTORIES)


def register_imputer(name: str, factory) -> None:
    """Add a custom imputer factory (used by tests and extensions)."""
    _FACTORIES[name] = factory


def make_imputer(name: str, schema: Schema, seed: int = 0, **overrides) -> Imputer:
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError(
            f"unknown imputation method {name!r}; known: {sorted(_FACTORIES)}"
        ) from None
    return factory(schema, seed, **overrides)
