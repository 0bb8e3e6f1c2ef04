# =============================================================================
# hesslab - Seeded Random Streams
# =============================================================================
"""
Every stochastic routine draws from ``numpy.random.Generator`` over the
Philox-4x64 counter-based bit generator. A stream is identified by the user
seed plus an optional spawn key, so independent sub-streams (per epoch, per
Monte-Carlo sample, per grid cell) never overlap and can be regenerated in any
order.
"""

import numpy as np

RNG_ALGORITHM = "philox4x64"


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(sequence))
