"""Deterministic random streams for blocked, parallel Monte Carlo.

Draws are grouped in fixed-size blocks; block ``j`` of a scenario always gets
the same Philox stream derived from ``(seed, scenario key, j)``, so results do
not depend on how blocks are distributed over workers.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

BLOCK_SIZE = 8192

T = TypeVar("T")


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def block_rng(seed: int, stream: str, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(stream_key(stream), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def block_sizes(total: int, block_size: int = BLOCK_SIZE) -> list[int]:
    full, rest = divmod(int(total), block_size)
    return [block_size] * full + ([rest] if rest else [])


def map_blocks(fn: Callable[[np.random.Generator, int], T], total: int, seed: int, stream: str, workers: int = 1) -> list[T]:
    """Apply ``fn(rng, size)`` to every block, returning results in block order."""
    sizes = block_sizes(total)

    def run(j: int) -> T:
        return fn(block_rng(seed, stream, j), sizes[j])

    if workers <= 1 or len(sizes) <= 1:
        return [run(j) for j in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(sizes))))
