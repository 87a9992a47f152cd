"""Counter-based random number streams for reproducible parallel Monte Carlo.

Every replica draws from its own Philox stream keyed by ``(master_seed,
stream_id)``.  Streams with distinct ids are statistically independent, and
replaying the same key is bit-identical regardless of how many other replicas
ran or in which order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Address of one Philox counter stream."""

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = [self.master_seed & _MASK64, self.stream_id & _MASK64]
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, offset: int) -> "RngStream":
        """Stream with id shifted by ``offset`` (for sub-experiments)."""
        return RngStream(self.master_seed, self.stream_id + offset)


def replica_generators(master_seed: int, stream_ids) -> list[np.random.Generator]:
    """One independent generator per replica, in stream-id order."""
    return [RngStream(master_seed, int(s)).generator() for s in stream_ids]
