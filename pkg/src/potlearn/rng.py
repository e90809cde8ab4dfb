"""Seeded random streams.

Every stochastic routine in the package draws from a counter-based Philox
generator keyed by an integer seed plus an optional stream key, so a run is
fully determined by (seed, config) and independent streams never collide.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a Philox generator for the given seed and stream key."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(seed=seq))
