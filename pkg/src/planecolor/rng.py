"""Seedable counter-based random streams.

Every stochastic routine in this package takes an explicit :class:`RngStream`.
A stream is identified by a ``(seed, stream_id)`` pair; the same pair always
reproduces the same draw sequence, and distinct stream ids give statistically
independent streams (Philox counter-based generator).  Replicate ``k`` of a
Monte Carlo experiment conventionally runs on ``base.substream(k)``.
"""

from __future__ import annotations

import numpy as np

_MIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # Standard splitmix64 finalizer; used to decorrelate derived stream ids.
    x = (x + _MIX_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


class RngStream:
    """A reproducible random stream keyed by (seed, stream_id).

    Thin wrapper over ``numpy.random.Generator`` with the Philox bit
    generator, which is counter-based: the 128-bit key is built from the
    seed and stream id, so streams never share state.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = self.seed | (self.stream_id << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def gen(self) -> np.random.Generator:
        return self._gen

    def substream(self, k: int) -> "RngStream":
        """Derive an independent child stream; deterministic in (self, k)."""
        child = _splitmix64(self.stream_id ^ _splitmix64(k & _MASK64))
        return RngStream(self.seed, child)

    # Delegates for the distributions used across the package.

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def exponential(self, scale=1.0, size=None):
        return self._gen.exponential(scale, size)

    def poisson(self, lam, size=None):
        return self._gen.poisson(lam, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def permutation(self, x):
        return self._gen.permutation(x)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
