"""Counter-mode random streams.

Every trial draws from its own generator derived from ``(master, trial_id,
stream)`` alone, so results do not depend on scheduling or worker count.
"""

from __future__ import annotations

import numpy as np

# stream labels used across the package
STREAM_PROTOCOL = 0
STREAM_DEVICES = 1
STREAM_STRATEGY = 2
STREAM_LEMMAS = 3


def trial_rng(master: int, trial_id: int = 0, stream: int = 0) -> np.random.Generator:
    """Generator for one (trial, stream) cell of a seeded experiment."""
    if master < 0 or trial_id < 0 or stream < 0:
        raise ValueError("seeds, trial ids and stream ids must be non-negative")
    ss = np.random.SeedSequence(int(master), spawn_key=(int(trial_id), int(stream)))
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
