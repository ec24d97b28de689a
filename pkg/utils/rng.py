"""
Deterministic random streams for Monte Carlo trials.

Every trial draws from a Generator derived from (master seed, trial index,
stream), so results do not depend on execution order or worker count.
"""

from __future__ import annotations

import numpy as np

# Stream identifiers inside a trial
H0_STREAM = 0
H1_STREAM = 1

MAX_SEED = 2**64 - 1


def make_rng(seed: int) -> np.random.Generator:
    """Create a Generator for a plain seed."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """
    Create the Generator for one trial stream.

    Args:
        seed: Master seed of the campaign (0 ≤ seed < 2**64)
        trial: Trial index
        stream: Sub-stream inside the trial (H0_STREAM / H1_STREAM)

    Returns:
        Independent numpy Generator
    """
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(trial, stream))
    return np.random.default_rng(sequence)
