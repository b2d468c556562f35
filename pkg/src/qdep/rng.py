"""Seeded random streams.

Every random draw in the package comes from a ``numpy.random.Generator``
backed by PCG64.  Independent streams are derived from a root seed with
``SeedSequence(seed, spawn_key=(purpose, *indices))``, so a replicate's
stream depends only on the root seed, the purpose tag and its own indices,
never on scheduling or worker count.
"""

import numpy as np

GENERATOR_ID = "numpy.PCG64/SeedSequence(seed, spawn_key=(purpose, *indices))"

# purpose tags for spawn keys
POOL = 0
POWER = 1
TIES = 2
SIMULATE = 3
NULL_SAMPLE = 4

DEFAULT_SEED = 20190507


def stream(seed, purpose, *indices):
    """Return the generator for ``(seed, purpose, *indices)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose),) + tuple(int(i) for i in indices))
    return np.random.Generator(np.random.PCG64(ss))
