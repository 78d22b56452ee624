"""
Seeded random streams for reproducible simulations.

One user seed is expanded into named, independent numpy generators so that
changing how one stage draws random numbers never shifts another stage.
"""
import zlib

import numpy as np

# Named stream identifiers
STREAM_TRACE = "trace"
STREAM_ATTACK = "attack"
STREAM_INIT = "init"
STREAM_SHUFFLE = "shuffle"
STREAM_EVAL_TRACE = "eval_trace"
STREAM_EVAL_ATTACK = "eval_attack"

MAX_SEED = 2**64 - 1


class SeedStreams:
    """Expands a 64-bit seed into named numpy Generator sub-streams."""

    def __init__(self, seed: int):
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            raise ValueError(f"seed must be an integer, got {seed!r}")
        if not 0 <= int(seed) <= MAX_SEED:
            raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)

    def stream(self, name: str, *extra: int) -> np.random.Generator:
        """
        Return a fresh generator for a named sub-stream.

        Calling twice with the same name returns two generators producing the
        same sequence.

        Args:
            name: Stream name (e.g. 'trace', 'attack')
            *extra: Optional integers further distinguishing the stream

        Returns:
            numpy Generator
        """
        key = zlib.crc32(name.encode("utf-8"))
        sequence = np.random.SeedSequence([self.seed & 0xFFFFFFFF, self.seed >> 32, key, *extra])
        return np.random.default_rng(sequence)

    def __repr__(self) -> str:
        return f"SeedStreams(seed={self.seed})"
