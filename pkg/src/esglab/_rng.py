"""Seed derivation for reproducible sweeps.

Every stochastic routine draws from a PCG64 generator built from a single
integer seed. Sweeps derive one integer per (stream, size, replication)
through ``numpy.random.SeedSequence`` spawn keys, so streams are
independent and do not depend on execution order.
"""

import numpy as np

# stream tags keep replication seeds and reference seeds disjoint
REPLICATION_STREAM = 1
REFERENCE_STREAM = 2
QUADRATIC_STREAM = 3


def derive_seed(master_seed, *keys):
    """Return a 63-bit integer seed for ``(master_seed, *keys)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed):
    """Build the library's generator; ``None`` draws fresh OS entropy."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))
