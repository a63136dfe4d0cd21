"""Counter-based random stream derivation.

Every stochastic routine in this package draws from a stream derived as
``substream(master_seed, *path)`` where ``path`` identifies the consumer
(replication index, grid position, pre-pass tag, ...).  Streams are backed
by Philox, a counter-based generator, keyed through ``SeedSequence`` spawn
keys, so

* the stream for a given path never depends on how many other paths were
  consumed (no sequential dependence), and
* replications parallelize with no shared state and merge deterministically.
"""

from __future__ import annotations

import numpy as np

# Tags keep unrelated consumers of one master seed on disjoint streams.
STREAM_SAMPLE = 0
STREAM_MOMENTS = 1
STREAM_MEAN_PREPASS = 2
STREAM_INSTANCES = 3


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Return the deterministic generator for (master_seed, path)."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
