"""Seeded random streams with documented key-splitting.

Every stochastic routine in the package takes a RandomStream. Streams
are derived from a single 64-bit seed through numpy's SeedSequence
tree: ``RandomStream.from_seed(seed)`` is the root, ``stream.spawn(k)``
derives k independent child streams (used per ladder level and per
experiment replicate). Identical seeds therefore reproduce identical
runs regardless of how many levels or replicates share the root.

Draws are served from internal buffers filled by one vectorized
Generator call at a time; this keeps tight chain loops cheap while
staying bit-deterministic for a fixed buffer size.
"""

from __future__ import annotations

import numpy as np

_BUF = 8192


class RandomStream:
    """Buffered uniform stream over a numpy PCG64 generator.

    Scalar draws (uniform, randint) and vector draws (uniforms) consume
    from separate buffers refilled from the same generator; the overall
    sequence is deterministic for a fixed call pattern.
    """

    def __init__(self, seed_seq: np.random.SeedSequence):
        self._seq = seed_seq
        self._gen = np.random.Generator(np.random.PCG64(seed_seq))
        self._sbuf: list[float] = []
        self._spos = 0
        self._abuf = np.empty(0)
        self._apos = 0

    @classmethod
    def from_seed(cls, seed: int) -> "RandomStream":
        return cls(np.random.SeedSequence(int(seed)))

    def spawn(self, n: int) -> list["RandomStream"]:
        """Derive n independent child streams (deterministic in the seed)."""
        return [RandomStream(child) for child in self._seq.spawn(n)]

    def uniform(self) -> float:
        """One float in [0, 1)."""
        if self._spos == len(self._sbuf):
            self._sbuf = self._gen.random(_BUF).tolist()
            self._spos = 0
        u = self._sbuf[self._spos]
        self._spos += 1
        return u

    def uniforms(self, n: int) -> np.ndarray:
        """n floats in [0, 1) as an array."""
        remaining = len(self._abuf) - self._apos
        if n <= remaining:
            out = self._abuf[self._apos:self._apos + n].copy()
            self._apos += n
            return out
        parts = [self._abuf[self._apos:]]
        need = n - remaining
        while need > 0:
            self._abuf = self._gen.random(_BUF)
            self._apos = min(need, _BUF)
            parts.append(self._abuf[:self._apos])
            need -= self._apos
        return np.concatenate(parts)

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if self._spos == len(self._sbuf):
            self._sbuf = self._gen.random(_BUF).tolist()
            self._spos = 0
        u = self._sbuf[self._spos]
        self._spos += 1
        j = int(u * n)
        return n - 1 if j == n else j  # guard the u ~ 1 rounding edge
