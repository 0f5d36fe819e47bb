"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by a
master seed plus integer counters (replication, resample, ...), so any single
draw can be regenerated in isolation and in any order.
"""

import numpy as np


def stream(seed: int, *counters: int) -> np.random.Generator:
    """Generator for the sub-stream of ``seed`` addressed by ``counters``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *counters])))


def substream_seed(seed: int, *counters: int) -> int:
    """A 63-bit integer seed derived from ``seed`` and ``counters``."""
    state = np.random.SeedSequence([seed, *counters]).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))
