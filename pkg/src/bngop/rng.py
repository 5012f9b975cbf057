"""Counter-based random-number streams for reproducible parallel Monte Carlo.

Paths are simulated in fixed-width chunks of ``CHUNK`` paths.  Each chunk owns
one Philox stream whose 128-bit key is derived from ``(seed, purpose,
chunk_index)``.  Because the chunk boundaries depend only on ``n_paths`` (never
on the worker count), results are bit-identical no matter how many threads
process the chunks.
"""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np

#: Fixed chunk width; part of the reproducibility contract, do not change
#: without bumping golden files.
CHUNK = 4096

_MASK64 = (1 << 64) - 1

# Purpose tags keep independent uses of the same (seed, chunk) apart.
PURPOSE_MARKET = 1
PURPOSE_EVENTS = 2
PURPOSE_WCAP = 3
PURPOSE_BENEFITS = 4
PURPOSE_RESOLVE = 5


def chunk_ranges(n_paths: int, chunk: int = CHUNK) -> Iterator[tuple[int, int, int]]:
    """Yield ``(start, stop, chunk_index)`` covering ``range(n_paths)``."""
    if n_paths < 0:
        raise ValueError("n_paths must be nonnegative")
    start = 0
    index = 0
    while start < n_paths:
        stop = min(start + chunk, n_paths)
        yield start, stop, index
        start = stop
        index += 1


def stream_key(seed: int, purpose: int, chunk_index: int) -> int:
    """128-bit Philox key for one (seed, purpose, chunk) stream."""
    if chunk_index < 0 or chunk_index >= 1 << 32:
        raise ValueError("chunk_index out of range")
    if purpose < 0 or purpose >= 1 << 16:
        raise ValueError("purpose out of range")
    return ((seed & _MASK64) << 64) | (purpose << 32) | chunk_index


def chunk_generator(seed: int, purpose: int, chunk_index: int) -> np.random.Generator:
    """Independent Generator for one chunk of paths."""
    return np.random.Generator(
        np.random.Philox(key=stream_key(seed, purpose, chunk_index))
    )


def stream_ids(n_paths: int, chunk: int = CHUNK) -> np.ndarray:
    """Per-path substream identifier (the owning chunk index)."""
    ids = np.empty(n_paths, dtype=np.int64)
    for start, stop, index in chunk_ranges(n_paths, chunk):
        ids[start:stop] = index
    return ids
