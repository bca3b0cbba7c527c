"""Shared generators for random test data."""

import numpy as np

from spbc.dynamics import PhaseState


def random_config(rng, spread=1.0, min_gap=0.3):
    """Four planar points with pairwise distances at least ``min_gap``."""
    while True:
        q = rng.normal(scale=spread, size=(4, 2))
        d = np.linalg.norm(q[:, None] - q[None], axis=-1)
        if d[np.triu_indices(4, 1)].min() > min_gap:
            return q


def random_centered_state(rng, spread=1.0):
    q = random_config(rng, spread)
    v = rng.normal(scale=0.5, size=(4, 2))
    return PhaseState(q, v).centered()
