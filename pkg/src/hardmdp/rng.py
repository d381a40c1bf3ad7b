"""Seedable random streams.

Every stream is a Philox4x64 counter-based generator keyed by a
``SeedSequence(seed, spawn_key=path)``.  A stream's draws depend only on
(seed, path), so episode ``i`` of a run can be replayed on its own, in any
order, on any worker.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


class RandomStream:
    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if seed < 0 or seed >= 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.path = tuple(path)
        seq = np.random.SeedSequence(entropy=seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int) -> RandomStream:
        return RandomStream(self.seed, self.path + (index,))

    def uniform(self) -> float:
        """53-bit uniform double in [0, 1)."""
        return float(self._gen.random())

    def bernoulli(self, p: Fraction) -> int:
        # float-to-Fraction comparison is exact
        return 1 if self.uniform() < p else 0

    def below(self, n: int) -> int:
        return int(self._gen.integers(n))

    def bits(self, n: int) -> int:
        """Uniform integer in [0, 2^n)."""
        out = 0
        for lo in range(0, n, 32):
            width = min(32, n - lo)
            out |= int(self._gen.integers(1 << width)) << lo
        return out

    @property
    def generator(self) -> np.random.Generator:
        return self._gen
