"""Counter-based random substreams.

Each path index and noise channel owns an independent Philox-4x64 stream:

* key     = (seed, path_index), both as unsigned 64-bit words
* counter = (0, 0, 0, channel) at the start of the stream

Channel numbers are ``W1 = 0``, ``W2 = 1``, ``N = 2``.  Step ``k`` of a path
uses the ``k``-th variate drawn from its channel stream (standard normals for
the Brownian channels, Poisson counts for ``N``).  The counter's low words
advance as draws are consumed, so channels never overlap, and no stream
depends on how paths are assigned to workers.
"""

from __future__ import annotations

import numpy as np

W1, W2, N = 0, 1, 2
_MASK = (1 << 64) - 1


def substream(seed: int, path_index: int, channel: int) -> np.random.Generator:
    if seed < 0 or seed > _MASK:
        raise ValueError(f"seed must fit in an unsigned 64-bit word, got {seed}")
    key = np.array([seed, path_index], dtype=np.uint64)
    counter = np.array([0, 0, 0, channel], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def normals(seed: int, path_index: int, channel: int, n: int) -> np.ndarray:
    return substream(seed, path_index, channel).standard_normal(n)


def poisson(seed: int, path_index: int, rate: float, n: int) -> np.ndarray:
    return substream(seed, path_index, N).poisson(rate, n)
