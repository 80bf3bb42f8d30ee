"""Seedable random number generation.

All stochastic code in the package draws from Philox, a counter-based
64-bit generator, so that every simulation is reproducible from a single
integer seed.  Independent streams (e.g. per worker chunk) are derived by
spawn keys, never by reusing or offsetting the seed.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, stream: tuple[int, ...] = ()) -> np.random.Generator:
    """Return a Philox generator for ``seed``, optionally on a sub-stream.

    The same ``(seed, stream)`` pair always yields the same sequence;
    distinct streams are statistically independent.
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(seed=seq))
