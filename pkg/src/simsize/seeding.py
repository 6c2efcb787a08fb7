"""Hierarchical, path-addressed random streams.

Every stochastic routine in the package draws from a ``SeedStream``: a master
seed plus an ordered path of ``(label, index)`` segments.  Two streams with
different paths under the same master seed are statistically independent, and
a given (master seed, path) pair always yields the same generator, regardless
of process, thread, or call order.  This is what makes search results
reproducible bit-for-bit under any degree of parallelism.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedStream:
    """Immutable handle on one branch of the random tree."""

    master_seed: int
    path: tuple[tuple[str, int], ...] = field(default_factory=tuple)

    def child(self, label: str, index: int = 0) -> "SeedStream":
        """Derive the sub-stream addressed by one more path segment."""
        return SeedStream(self.master_seed, self.path + ((label, int(index)),))

    def generator(self) -> np.random.Generator:
        """Instantiate the numpy generator for this exact path."""
        entropy = [self.master_seed & _MASK64]
        for label, index in self.path:
            entropy.append(zlib.crc32(label.encode("utf-8")))
            entropy.append(index & _MASK64)
        return np.random.default_rng(np.random.SeedSequence(entropy))
