"""Seeded randomness with reproducible forking.

Every stochastic component of the library draws from an :class:`RngStream`.
The underlying bit generator is PCG64 seeded through ``SeedSequence``, so a
given ``(seed, key)`` pair produces the identical draw sequence on every run
and platform. Streams are single-owner: code that wants parallel or
independent randomness forks children with :meth:`child` instead of sharing
one stream.
"""

from __future__ import annotations

import numpy as np


class RngStream:
    """Deterministic random stream keyed by ``(seed, key path)``.

    Forking with :meth:`child` derives a statistically independent stream
    whose draws depend only on the root seed and the key path, never on how
    much the parent has already drawn.
    """

    def __init__(self, seed: int, _key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in _key)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def child(self, *ids: int) -> "RngStream":
        """Fork a child stream keyed by this stream's key extended with ``ids``."""
        return RngStream(self.seed, self.key + tuple(ids))

    # draw primitives -----------------------------------------------------

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def bernoulli(self, p, size=None) -> np.ndarray:
        """0/1 draws; vector ``p`` broadcasts against ``size``."""
        return (self._gen.uniform(size=size) < np.asarray(p)).astype(np.int64)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self.key})"
