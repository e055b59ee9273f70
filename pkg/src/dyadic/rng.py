"""Counter-based uniforms keyed by (seed, scale, position).

Every draw is a pure function of its key, so blocks of positions can be
evaluated in any order, on any number of workers, with identical results.
"""
from __future__ import annotations

import hashlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _splitmix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, label: str) -> int:
    """Expand a top-level seed into an independent 64-bit seed for ``label``."""
    h = hashlib.blake2b(digest_size=8)
    h.update((seed & _MASK64).to_bytes(8, "little"))
    h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def uniforms(seed: int, j: int, positions: np.ndarray) -> np.ndarray:
    """Uniform doubles in [0, 1), one per position at scale ``j``."""
    key = _splitmix(np.asarray([seed & _MASK64], dtype=np.uint64))[0]
    counter = (np.uint64(j) << np.uint64(32)) | np.asarray(positions, dtype=np.uint64)
    z = _splitmix(counter ^ key)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
