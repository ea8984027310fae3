"""Input checks shared by the estimators, the harness and the CLI."""
from __future__ import annotations

import os
from collections.abc import Mapping
from numbers import Real

import numpy as np

from .model import Instance, InstanceError, load_instance


def check_instance(X) -> Instance:
    """Coerce ``X`` into an :class:`Instance`.

    Accepts an instance, a mapping in the JSON instance layout, or a path to
    such a JSON file.
    """
    if isinstance(X, Instance):
        return X
    if isinstance(X, Mapping):
        return Instance.from_dict(X)
    if isinstance(X, (str, os.PathLike)):
        return load_instance(X)
    raise InstanceError(f"expected an Instance, a mapping or a path, got {type(X).__name__}")


def check_fraction(value, name: str, *, low: float = 0.0, high: float = 1.0,
                   low_inclusive: bool = False, high_inclusive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    above = value >= low if low_inclusive else value > low
    below = value <= high if high_inclusive else value < high
    if not (above and below and np.isfinite(value)):
        lo = "[" if low_inclusive else "("
        hi = "]" if high_inclusive else ")"
        raise ValueError(f"{name} must lie in {lo}{low}, {high}{hi}, got {value}")
    return value


def check_arrival_order(instance: Instance, order) -> tuple[int, ...]:
    order = tuple(int(i) for i in order)
    if len(order) != instance.n or set(order) != set(instance.user_ids):
        raise InstanceError("arrival_order must be a permutation of the instance's user ids")
    return order


def check_seed(seed, name: str = "seed") -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ValueError(f"{name} must be an integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise ValueError(f"{name} must fit in 64 unsigned bits, got {seed}")
    return int(seed)
