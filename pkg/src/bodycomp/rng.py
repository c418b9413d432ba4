"""Seeded random streams.

All randomness comes from numpy's PCG64 bit generator (PCG-XSL-RR 128/64).
Independent substreams are keyed by integer tuples through ``SeedSequence``,
e.g. ``substream(seed, subject_index)``, so results do not depend on the
order in which work items are processed.
"""

import numpy as np

_MASK = (1 << 64) - 1


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & _MASK)))


def substream(seed, *keys):
    entropy = [int(seed) & _MASK] + [int(k) & _MASK for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
