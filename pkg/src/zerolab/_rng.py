"""Deterministic seeding.

Per-sample seeds are derived from (master seed, degree, sample index) with
splitmix64, so streams are reproducible independently of scheduling and of
how many workers consume the queue.  The derived 64-bit value seeds a
numpy PCG64 generator.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> int:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master_seed: int, degree: int, sample_index: int) -> int:
    s = master_seed & _MASK
    s = splitmix64(s ^ (degree & _MASK))
    s = splitmix64(s ^ (sample_index & _MASK))
    return s


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
