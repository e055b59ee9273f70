"""Fractal supports and their dyadic covers.

A support is described symbolically by a ``FractalSpec`` and materialized one
scale at a time as a ``LevelCover``: the set I_j of indices k whose dyadic
interval [k 2^-j, (k+1) 2^-j) meets the support.

Supported families:
- FullInterval: [0, 1].
- DigitRestricted(m, S): points whose base-2^m digits all lie in S.
- FiniteUnion: specs rescaled onto pairwise disjoint dyadic carriers.
- AffineIFS: attractor of x -> r x + t with rational r, t (outer covers only).
- ExplicitCover: level sets supplied by the caller.

Cells are matched against the symbolic coding of the support, so a point
with two binary expansions belongs to the cell of the expansion the coding
produces; the right endpoint 1 belongs to the last cell.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    TypeAdapter,
    ValidationError,
    field_serializer,
    field_validator,
    model_validator,
)
from scipy.optimize import brentq

from .config import get_settings, resolve_max_scale
from .errors import DomainError, InvalidParameterError, ScaleOverflowError
from .workers import concat_blocks

logger = logging.getLogger("dyadic")


# --- Dyadic intervals ---

class DyadicInterval(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    j: int = Field(ge=0)
    k: int = Field(ge=0)

    @model_validator(mode="after")
    def _check_position(self) -> "DyadicInterval":
        if self.k >= 1 << self.j:
            raise ValueError(f"position k={self.k} out of range for scale j={self.j}")
        return self

    @property
    def left(self) -> Fraction:
        return Fraction(self.k, 1 << self.j)

    @property
    def right(self) -> Fraction:
        return Fraction(self.k + 1, 1 << self.j)

    def contains(self, other: "DyadicInterval") -> bool:
        return other.j >= self.j and other.k >> (other.j - self.j) == self.k

    def disjoint(self, other: "DyadicInterval") -> bool:
        return not (self.contains(other) or other.contains(self))


# --- Fractal specifications ---

class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)


class FullInterval(_Spec):
    kind: Literal["full"] = "full"


class DigitRestricted(_Spec):
    kind: Literal["digits"] = "digits"
    m: int = Field(ge=1, le=16)
    digits: tuple[int, ...]

    @field_validator("digits")
    @classmethod
    def _normalize_digits(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if not value:
            raise ValueError("digit set S must be nonempty")
        return tuple(sorted(set(value)))

    @model_validator(mode="after")
    def _check_digits(self) -> "DigitRestricted":
        bad = [d for d in self.digits if not 0 <= d < 1 << self.m]
        if bad:
            raise ValueError(f"digits {bad} are outside 0..{(1 << self.m) - 1}")
        return self


class Placed(BaseModel):
    """A spec rescaled onto a dyadic carrier interval."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    carrier: DyadicInterval
    spec: "FractalSpec"


class FiniteUnion(_Spec):
    kind: Literal["union"] = "union"
    components: tuple[Placed, ...]

    @model_validator(mode="after")
    def _check_carriers(self) -> "FiniteUnion":
        if not self.components:
            raise ValueError("a union needs at least one component")
        carriers = [c.carrier for c in self.components]
        for a in range(len(carriers)):
            for b in range(a + 1, len(carriers)):
                if not carriers[a].disjoint(carriers[b]):
                    raise ValueError(
                        f"carriers ({carriers[a].j},{carriers[a].k}) and "
                        f"({carriers[b].j},{carriers[b].k}) overlap"
                    )
        return self

    @property
    def separation_scale(self) -> int:
        return max(c.carrier.j for c in self.components)


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(1 << 40)
    return Fraction(value)


class AffineMap(BaseModel):
    """x -> r x + t."""

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    r: Fraction
    t: Fraction

    @field_validator("r", "t", mode="before")
    @classmethod
    def _parse(cls, value: Any) -> Fraction:
        return _to_fraction(value)

    @field_serializer("r", "t")
    def _dump(self, value: Fraction) -> str:
        return str(value)


class AffineIFS(_Spec):
    kind: Literal["ifs"] = "ifs"
    maps: tuple[AffineMap, ...]

    @model_validator(mode="after")
    def _check_maps(self) -> "AffineIFS":
        if not self.maps:
            raise ValueError("an IFS needs at least one map")
        for mp in self.maps:
            if mp.r == 0 or abs(mp.r) >= 1:
                raise ValueError(f"map ratio {mp.r} must satisfy 0 < |r| < 1")
            lo, hi = sorted((mp.t, mp.r + mp.t))
            if lo < 0 or hi > 1:
                raise ValueError(f"map x -> {mp.r}x + {mp.t} does not send [0,1] into itself")
        return self


class ExplicitCover(_Spec):
    kind: Literal["explicit"] = "explicit"
    levels: dict[int, tuple[int, ...]]

    @model_validator(mode="after")
    def _check_levels(self) -> "ExplicitCover":
        if not self.levels:
            raise ValueError("explicit cover needs at least one level")
        for j, members in self.levels.items():
            if j < 0 or any(not 0 <= k < 1 << j for k in members):
                raise ValueError(f"level {j} has indices outside 0..2^{j}-1")
        return self


FractalSpec = Annotated[
    Union[FullInterval, DigitRestricted, FiniteUnion, AffineIFS, ExplicitCover],
    Field(discriminator="kind"),
]

Placed.model_rebuild()
FiniteUnion.model_rebuild()

_SPEC_ADAPTER: TypeAdapter = TypeAdapter(FractalSpec)


def parse_spec(payload: Any) -> FractalSpec:
    """Validate a key-value tree (e.g. from a scenario file) into a spec."""
    if isinstance(payload, BaseModel):
        return payload
    try:
        return _SPEC_ADAPTER.validate_python(payload)
    except ValidationError as e:
        raise InvalidParameterError(f"Invalid fractal spec: {e}") from e


def dump_spec(spec: FractalSpec) -> dict[str, Any]:
    return _SPEC_ADAPTER.dump_python(spec, mode="json")


# --- Convenience constructors ---

def symmetric_cantor(m: int) -> DigitRestricted:
    """C(2^-m): keep the first and last of 2^m subintervals at every step."""
    return DigitRestricted(m=m, digits=(0, (1 << m) - 1))


def symmetric_cantor_ifs(r: Fraction | str | float) -> AffineIFS:
    ratio = _to_fraction(r)
    if not 0 < ratio < Fraction(1, 2):
        raise InvalidParameterError(f"symmetric Cantor ratio must lie in (0, 1/2), got {ratio}")
    return AffineIFS(maps=(AffineMap(r=ratio, t=0), AffineMap(r=ratio, t=1 - ratio)))


def place(spec: FractalSpec, j: int, k: int) -> Placed:
    return Placed(carrier=DyadicInterval(j=j, k=k), spec=spec)


def conclusion_union(ns: tuple[int, ...] = (2, 3, 4)) -> FiniteUnion:
    """Disjoint digit-restricted components of dimension 1 - 1/n.

    Component i (1-based) sits on the carrier [1 - 2^(1-i), 1 - 2^-i).
    """
    components = []
    for i, n in enumerate(ns, start=1):
        component = DigitRestricted(m=n, digits=tuple(range(0, 1 << n, 2)))
        components.append(place(component, i, (1 << i) - 2))
    return FiniteUnion(components=tuple(components))


def theoretical_dimension(spec: FractalSpec) -> float | None:
    if isinstance(spec, FullInterval):
        return 1.0
    if isinstance(spec, DigitRestricted):
        return math.log2(len(spec.digits)) / spec.m
    if isinstance(spec, FiniteUnion):
        dims = [theoretical_dimension(c.spec) for c in spec.components]
        if any(d is None for d in dims):
            return None
        return max(dims)
    if isinstance(spec, AffineIFS):
        # similarity dimension; an upper bound once the maps overlap
        ratios = [abs(float(mp.r)) for mp in spec.maps]
        if len(ratios) == 1:
            return 0.0
        return float(brentq(lambda s: sum(r ** s for r in ratios) - 1.0, 0.0, 64.0))
    return None


def natural_step(spec: FractalSpec) -> int:
    """Regression stride that follows the digit-block structure."""
    if isinstance(spec, DigitRestricted):
        return spec.m
    if isinstance(spec, FiniteUnion):
        return reduce(math.lcm, (natural_step(c.spec) for c in spec.components), 1)
    return 1


# --- Level covers ---

@dataclass(frozen=True, eq=False)
class LevelCover:
    """I_j as a read-only boolean array over {0, ..., 2^j - 1}."""

    j: int
    bits: np.ndarray = field(repr=False)
    exactness: Literal["exact", "outer"] = "exact"

    def __post_init__(self) -> None:
        if self.bits.dtype != np.bool_ or self.bits.shape != (1 << self.j,):
            raise ValueError(f"cover bits must be a bool array of length 2^{self.j}")
        if self.bits.flags.writeable:
            self.bits.setflags(write=False)

    @classmethod
    def from_indices(
        cls, j: int, indices: np.ndarray, exactness: Literal["exact", "outer"] = "exact"
    ) -> "LevelCover":
        bits = np.zeros(1 << j, dtype=bool)
        bits[np.asarray(indices, dtype=np.int64)] = True
        return cls(j=j, bits=bits, exactness=exactness)

    @cached_property
    def indices(self) -> np.ndarray:
        idx = np.flatnonzero(self.bits).astype(np.int64)
        idx.setflags(write=False)
        return idx

    @cached_property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def contains(self, k: int) -> bool:
        return 0 <= k < self.bits.size and bool(self.bits[k])

    def project(self, j: int) -> "LevelCover":
        """Members seen at the coarser scale j (right shift by self.j - j bits)."""
        if j > self.j:
            raise DomainError(f"cannot project scale {self.j} onto finer scale {j}")
        parents = np.unique(self.indices >> (self.j - j))
        return LevelCover.from_indices(j, parents, self.exactness)

    def same_members(self, other: "LevelCover") -> bool:
        return self.j == other.j and bool(np.array_equal(self.bits, other.bits))

    def __len__(self) -> int:
        return self.count

    def __repr__(self) -> str:
        return f"LevelCover(j={self.j}, count={self.count}, exactness={self.exactness!r})"


def _check_scale(j: int, max_scale: int | None) -> None:
    limit = resolve_max_scale(max_scale)
    if j < 0:
        raise InvalidParameterError(f"scale must be nonnegative, got {j}")
    if j > limit:
        raise ScaleOverflowError(j, limit)


def _digit_indices(m: int, digits: tuple[int, ...], j: int) -> np.ndarray:
    """Sorted indices of the j-bit prefixes of digit strings over S."""
    n, rem = divmod(j, m)
    s = np.asarray(digits, dtype=np.int64)
    out = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        out = ((out[:, None] << m) | s[None, :]).ravel()
    if rem:
        heads = np.unique(s >> (m - rem))
        out = ((out[:, None] << rem) | heads[None, :]).ravel()
    return out


def _exact_indices(spec: FractalSpec, j: int) -> np.ndarray:
    if isinstance(spec, FullInterval):
        return np.arange(1 << j, dtype=np.int64)
    if isinstance(spec, DigitRestricted):
        return _digit_indices(spec.m, spec.digits, j)
    if isinstance(spec, FiniteUnion):
        parts = []
        for comp in spec.components:
            c = comp.carrier
            if j <= c.j:
                parts.append(np.array([c.k >> (c.j - j)], dtype=np.int64))
            else:
                inner = _exact_indices(comp.spec, j - c.j)
                parts.append((np.int64(c.k) << (j - c.j)) | inner)
        return np.unique(np.concatenate(parts))
    if isinstance(spec, ExplicitCover):
        return _explicit_indices(spec, j)
    raise DomainError(f"{type(spec).__name__} has no exact cover")


def _explicit_indices(spec: ExplicitCover, j: int) -> np.ndarray:
    if j in spec.levels:
        return np.unique(np.asarray(spec.levels[j], dtype=np.int64))
    deeper = sorted(level for level in spec.levels if level > j)
    if not deeper:
        raise DomainError(
            f"explicit cover has no level at or below scale {j} "
            f"(supplied: {sorted(spec.levels)})"
        )
    source = np.asarray(spec.levels[deeper[0]], dtype=np.int64)
    return np.unique(source >> (deeper[0] - j))


def is_exact(spec: FractalSpec) -> bool:
    if isinstance(spec, AffineIFS):
        return False
    if isinstance(spec, FiniteUnion):
        return all(is_exact(c.spec) for c in spec.components)
    return True


def _ifs_outer_bits(
    spec: AffineIFS, j: int, budget: int, threads: int | None
) -> tuple[np.ndarray, bool, int]:
    """Iterate the maps on grid cells with outward rounding until stable."""
    n = 1 << j
    grid = float(n)
    maps = [(float(mp.r), float(mp.t) * grid) for mp in spec.maps]
    current = np.arange(n, dtype=np.int64)
    for iteration in range(1, budget + 1):
        diff = np.zeros(n + 1, dtype=np.int64)
        for r, shift in maps:
            def spans(cells: np.ndarray, r: float = r, shift: float = shift) -> np.ndarray:
                a = r * cells.astype(np.float64) + shift
                b = a + r
                lo = np.floor(np.minimum(a, b) - 1e-9)
                hi = np.floor(np.maximum(a, b) + 1e-9)
                return np.stack([lo, hi], axis=1)

            bounds = concat_blocks(spans, current, threads).reshape(-1, 2)
            lo = np.clip(bounds[:, 0], 0, n - 1).astype(np.int64)
            hi = np.clip(bounds[:, 1], 0, n - 1).astype(np.int64)
            diff += np.bincount(lo, minlength=n + 1)
            diff -= np.bincount(hi + 1, minlength=n + 1)
        members = np.flatnonzero(np.cumsum(diff[:n]) > 0)
        if np.array_equal(members, current):
            return members, True, iteration
        current = members
    return current, False, budget


def build_cover(
    spec: FractalSpec,
    j: int,
    *,
    max_scale: int | None = None,
    threads: int | None = None,
    ifs_max_iter: int | None = None,
) -> LevelCover:
    """Materialize I_j for ``spec``.

    Args:
        spec: Symbolic support.
        j: Dyadic scale.
        max_scale: Override for DYADIC_MAX_SCALE.
        threads: Worker cap (does not change the result).
        ifs_max_iter: Override for DYADIC_IFS_MAX_ITER.

    Returns:
        LevelCover flagged ``exact`` for symbolic specs and ``outer`` for IFS
        attractors and unions containing one.
    """
    _check_scale(j, max_scale)
    if isinstance(spec, FullInterval):
        return LevelCover(j=j, bits=np.ones(1 << j, dtype=bool), exactness="exact")
    if isinstance(spec, AffineIFS):
        budget = get_settings().ifs_max_iter if ifs_max_iter is None else ifs_max_iter
        members, stable, iterations = _ifs_outer_bits(spec, j, budget, threads)
        if not stable:
            logger.warning(
                f"IFS cover at scale {j} did not stabilize within {budget} iterations; "
                f"returning the current outer approximation"
            )
        else:
            logger.debug(f"IFS cover at scale {j} stabilized after {iterations} iterations")
        return LevelCover.from_indices(j, members, "outer")
    if isinstance(spec, FiniteUnion) and not is_exact(spec):
        bits = np.zeros(1 << j, dtype=bool)
        for comp in spec.components:
            c = comp.carrier
            if j <= c.j:
                bits[c.k >> (c.j - j)] = True
            else:
                inner = build_cover(comp.spec, j - c.j, max_scale=max_scale,
                                    threads=threads, ifs_max_iter=ifs_max_iter)
                bits[(np.int64(c.k) << (j - c.j)) | inner.indices] = True
        return LevelCover(j=j, bits=bits, exactness="outer")
    return LevelCover.from_indices(j, _exact_indices(spec, j), "exact")


def cover_count(spec: FractalSpec, j: int, *, max_scale: int | None = None) -> int:
    """#I_j, in closed form where the spec allows it."""
    _check_scale(j, max_scale)
    if isinstance(spec, FullInterval):
        return 1 << j
    if isinstance(spec, DigitRestricted):
        n, rem = divmod(j, spec.m)
        heads = len({d >> (spec.m - rem) for d in spec.digits}) if rem else 1
        return len(spec.digits) ** n * heads
    if isinstance(spec, FiniteUnion) and is_exact(spec) and j >= spec.separation_scale:
        return sum(cover_count(c.spec, j - c.carrier.j, max_scale=max_scale)
                   for c in spec.components)
    return build_cover(spec, j, max_scale=max_scale).count


def children_count(cover_parent: LevelCover, cover_child: LevelCover, k: int) -> int:
    """Number of child-scale members inside the parent interval k."""
    if cover_child.j <= cover_parent.j:
        raise DomainError(
            f"child scale {cover_child.j} must exceed parent scale {cover_parent.j}"
        )
    if not cover_parent.contains(k):
        raise DomainError(f"k={k} is not a member of I_{cover_parent.j}")
    shift = cover_child.j - cover_parent.j
    lo, hi = np.searchsorted(cover_child.indices, [k << shift, (k + 1) << shift])
    return int(hi - lo)


def child_counts(cover_parent: LevelCover, cover_child: LevelCover) -> np.ndarray:
    """Children counts aligned with ``cover_parent.indices``."""
    if cover_child.j <= cover_parent.j:
        raise DomainError(
            f"child scale {cover_child.j} must exceed parent scale {cover_parent.j}"
        )
    shift = cover_child.j - cover_parent.j
    per_cell = np.bincount(cover_child.indices >> shift, minlength=1 << cover_parent.j)
    return per_cell[cover_parent.indices]
