"""Counter-based random streams.

Streams are keyed by (seed, stream_id) through a Philox counter-based
generator, so stream k of a run is identical no matter how many worker
processes are used or in which order replications execute.
"""

import numpy as np

from .exceptions import InvalidArgumentError

_U64 = 2**64


class RngStream:
    """One independently seeded random stream.

    Parallel code creates one stream per task (stream_id = replication
    index); a stream instance is single-owner and must not be shared.
    """

    def __init__(self, seed, stream_id=0):
        if not (0 <= int(seed) < _U64) or not (0 <= int(stream_id) < _U64):
            raise InvalidArgumentError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = (np.uint64(self.seed), np.uint64(self.stream_id))
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def spawn(self, stream_id):
        """A sibling stream with the same seed and a different stream id."""
        return RngStream(self.seed, stream_id)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
