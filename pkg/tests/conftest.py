from __future__ import annotations

import itertools

import numpy as np
import pytest

from dyadic.covers import DigitRestricted, FullInterval, conclusion_union, symmetric_cantor

# Statistical checks run on these seeds and need QUORUM passes.
SEEDS = list(range(101, 109))
SEEDS_16 = list(range(201, 217))
QUORUM = 7


def digit_oracle(m: int, digits: tuple[int, ...], j: int) -> set[int]:
    """I_j by enumerating every digit string long enough to fix j bits."""
    n = -(-j // m)
    out = set()
    for word in itertools.product(digits, repeat=n):
        value = 0
        for d in word:
            value = (value << m) | d
        out.add(value >> (n * m - j))
    return out


def quorum(flags) -> bool:
    flags = list(flags)
    return sum(bool(f) for f in flags) >= QUORUM * len(flags) / 8


@pytest.fixture
def unit():
    return FullInterval()


@pytest.fixture
def cantor_half():
    return DigitRestricted(m=2, digits=(0, 3))


@pytest.fixture
def cantor_third():
    return symmetric_cantor(3)


@pytest.fixture
def three_digits():
    return DigitRestricted(m=2, digits=(0, 1, 3))


@pytest.fixture
def union_kn():
    return conclusion_union((2, 3, 4))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
