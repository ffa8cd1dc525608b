"""Seeded random streams.

Every random draw in the library comes from a PCG64 generator built from a
``numpy.random.SeedSequence`` whose entropy is the tuple
``(seed, *keys)``.  Callers split streams by appending integer keys, e.g.
``stream(seed, episode, player)``.  Two calls with the same key tuple return
generators that produce identical sequences, so any draw can be reproduced
without replaying the run that preceded it.

Key layout used by the learners:

* Nash-UCB, Nash-VI: ``(seed, episode)`` for the environment noise.
* Frank-Wolfe: ``(seed, episode, player)`` for player ``player``'s action
  draws over the episode's rounds (rounds consume the stream in order) and
  ``(seed, episode, ENV_KEY)`` for facility-reward noise.
"""

from __future__ import annotations

import numpy as np

ENV_KEY = 2**32 - 1


def stream(seed: int, *keys: int) -> np.random.Generator:
    entropy = [int(seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ValueError(f"stream keys must be non-negative, got {entropy}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
