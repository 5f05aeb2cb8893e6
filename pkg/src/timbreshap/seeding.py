"""Seed-stream derivation shared across training and explanation.

Every stochastic stage owns a distinct stream keyed by (seed, stage tag,
optional index), so per-sample work is reproducible independently of
execution order or parallelism.
"""
from __future__ import annotations

import numpy as np

_SEED_MASK = (1 << 64) - 1

# stage tags
INIT = 0
TRAIN_SHUFFLE = 1
BASELINE_SHUFFLE = 2
PATH_SAMPLES = 3


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for stream (seed, *key); negative seeds are masked to u64."""
    return np.random.default_rng((seed & _SEED_MASK, *key))
