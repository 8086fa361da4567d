"""Seed derivation for reproducible, order-independent random streams."""

from __future__ import annotations

import random

from .errors import InputError

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One output of the SplitMix64 mixer for state ``x``."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Seed of sub-stream ``index``: ``seed XOR splitmix64(index)``."""
    return (seed & MASK64) ^ splitmix64(index)


def make_rng(seed: int) -> random.Random:
    if not 0 <= seed <= MASK64:
        raise InputError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return random.Random(seed)


def trial_rng(seed: int, index: int) -> random.Random:
    return random.Random(derive_seed(seed, index))
