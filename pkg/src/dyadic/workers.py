"""Block-parallel helpers.

Work is split into fixed-size index blocks whose boundaries do not depend on
the worker count, and results are always reassembled in block order, so the
output of every caller is identical for any ``threads`` value.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

from .config import resolve_threads

T = TypeVar("T")

BLOCK_SIZE = 1 << 16


def blocks(n: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    return [(lo, min(n, lo + block_size)) for lo in range(0, n, block_size)]


def map_blocks(
    fn: Callable[[int, int], T],
    n: int,
    threads: int | None = None,
    block_size: int = BLOCK_SIZE,
) -> list[T]:
    """Apply ``fn(lo, hi)`` to consecutive ranges covering ``[0, n)``."""
    spans = blocks(n, block_size)
    workers = resolve_threads(threads)
    if workers == 1 or len(spans) <= 1:
        return [fn(lo, hi) for lo, hi in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda span: fn(*span), spans))


def concat_blocks(
    fn: Callable[[np.ndarray], np.ndarray],
    items: np.ndarray,
    threads: int | None = None,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """Run an elementwise array function over ``items`` block by block."""
    if len(items) == 0:
        return fn(items)
    parts: Sequence[np.ndarray] = map_blocks(
        lambda lo, hi: fn(items[lo:hi]), len(items), threads, block_size
    )
    return np.concatenate(parts)
