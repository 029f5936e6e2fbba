"""Reproducible block-parallel random streams.

Paths are split into fixed-size blocks; block ``i`` always draws from a
Philox generator keyed by ``(seed, i)``.  Results therefore do not depend on
how many worker threads process the blocks.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

from ..errors import InputError

__all__ = ["BLOCK_SIZE", "block_rng", "map_blocks", "thread_cap"]

BLOCK_SIZE = 4096
_MASK = (1 << 64) - 1

R = TypeVar("R")


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed & _MASK, block & _MASK], dtype=np.uint64)))


def thread_cap() -> int:
    """Worker count: ``RANDHORIZON_THREADS`` if set, else the CPU count."""
    raw = os.environ.get("RANDHORIZON_THREADS")
    if raw:
        try:
            value = int(raw)
        except ValueError as err:
            raise InputError(f"RANDHORIZON_THREADS must be an integer, got {raw!r}") from err
        return max(1, value)
    return max(1, os.cpu_count() or 1)


def map_blocks(
    fn: Callable[[np.random.Generator, int], R],
    paths: int,
    seed: int,
    threads: int | None = None,
    block_size: int = BLOCK_SIZE,
) -> list[R]:
    """Apply ``fn(rng, count)`` to every block of ``paths``; results in block order."""
    if paths < 1:
        raise InputError("need at least one path")
    counts = [block_size] * (paths // block_size)
    if paths % block_size:
        counts.append(paths % block_size)
    jobs = [(block_rng(seed, i), c) for i, c in enumerate(counts)]
    workers = min(threads or thread_cap(), len(jobs))
    if workers <= 1:
        return [fn(g, c) for g, c in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
