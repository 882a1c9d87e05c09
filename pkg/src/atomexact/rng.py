"""Seedable, splittable random streams.

Every sampler in this package takes a ``numpy.random.Generator``.  A
``RandomStream`` is the reproducibility handle used to mint those
generators: the same ``(seed, path)`` always yields the same draw
sequence, and distinct paths yield statistically independent streams
(numpy's ``SeedSequence`` spawning contract).  Parallel replicates each
get their own sub-stream so results do not depend on scheduling order.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RandomStream:
    """A reproducible stream identified by a 64-bit seed and a stream path.

    ``path`` is a tuple of integers; ``split(i)`` appends ``i`` to it.
    Streams with different paths are independent.
    """

    seed: int
    path: tuple = ()

    def generator(self):
        """Fresh Generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(self.seed, spawn_key=tuple(self.path))
        return np.random.default_rng(seq)

    def split(self, index):
        """Independent child stream (e.g. one per replicate or thread)."""
        return RandomStream(self.seed, tuple(self.path) + (int(index),))
