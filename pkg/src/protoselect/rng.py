"""Seeded, counter-based random number generation.

All randomness in the package flows through here. Streams are derived from
(seed, *key) tuples via SeedSequence feeding a Philox counter-based generator,
so the same seed and key always yield the same bits regardless of execution
order or parallel schedule.
"""
from __future__ import annotations

import numpy as np


def derived_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *key)."""
    entropy = [int(seed)] + [int(k) for k in key]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
