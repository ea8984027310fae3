"""Seed derivation for reproducible, independently addressable trials.

A trial's seed is ``base XOR splitmix64((point << 32) | trial)``.  The mix only
depends on the trial's own coordinates, so adding sweep points or trials
never changes the draws of existing ones.  Seeds feed
``numpy.random.default_rng`` (PCG64).
"""
from __future__ import annotations

import os

MASK64 = (1 << 64) - 1
SEED_ENV_VAR = "CROWDSENSE_SEED"


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(base: int, point: int, trial: int) -> int:
    if not (0 <= point < 2**32 and 0 <= trial < 2**32):
        raise ValueError("point and trial indices must fit in 32 bits")
    return (base & MASK64) ^ splitmix64((point << 32) | trial)


def seed_from_env(default: int) -> int:
    """``CROWDSENSE_SEED`` when set, otherwise ``default``."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw, 0)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None
    if not 0 <= value <= MASK64:
        raise ValueError(f"{SEED_ENV_VAR} must fit in 64 unsigned bits")
    return value
