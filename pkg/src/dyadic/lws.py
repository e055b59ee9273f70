"""Lacunary wavelet series on a fractal support.

At scale j every covered position k is active with probability
p_j = 2^{(eta - H) j}, independently, and an active position carries the
coefficient 2^{-alpha j}. Magnitudes are not L2-normalized: the wavelet is
taken as psi(2^j x - k).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import binom, chisquare

from .config import resolve_max_scale
from .covers import FractalSpec, build_cover, cover_count
from .dimension import LogLogFit, fit_slope
from .errors import DomainError, InvalidParameterError, ScaleOverflowError, UndefinedDimensionError
from .rng import uniforms
from .workers import concat_blocks

logger = logging.getLogger("dyadic")


class LwsParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(gt=0)
    eta: float = Field(gt=0)
    H: float = Field(gt=0, le=1)
    j_max: int = Field(ge=0)
    seed: int = Field(0, ge=0, lt=1 << 64)

    @model_validator(mode="after")
    def _check_lacunarity(self) -> "LwsParams":
        if self.eta >= self.H:
            raise ValueError(f"lacunarity eta={self.eta} must be below H={self.H}")
        return self


def activation_probability(H: float, eta: float, j: int) -> float:
    exponent = (eta - H) * j
    if exponent < -1000:
        return 0.0
    return 2.0 ** exponent


def predicted_count(spec: FractalSpec, params: LwsParams, j: int) -> float:
    """E[#A_j] = #I_j p_j."""
    return cover_count(spec, j) * activation_probability(params.H, params.eta, j)


@dataclass(frozen=True, eq=False)
class LwsCoefficients:
    spec: FractalSpec
    alpha: float
    j_max: int
    active: dict[int, np.ndarray] = field(repr=False)
    params: LwsParams | None = None

    def magnitude(self, j: int) -> float:
        return 2.0 ** (-self.alpha * j)

    def at(self, j: int) -> np.ndarray:
        return self.active.get(j, np.zeros(0, dtype=np.int64))

    def count(self, j: int) -> int:
        return int(self.at(j).size)

    def counts(self) -> list[tuple[int, int]]:
        return [(j, self.count(j)) for j in range(self.j_max + 1)]

    @property
    def total(self) -> int:
        return sum(a.size for a in self.active.values())

    @classmethod
    def all_active(cls, spec: FractalSpec, alpha: float, j_max: int,
                   max_scale: int | None = None) -> "LwsCoefficients":
        """Deterministic coefficients with A_j = I_j at every scale."""
        active = {j: build_cover(spec, j, max_scale=max_scale).indices for j in range(j_max + 1)}
        return cls(spec=spec, alpha=alpha, j_max=j_max, active=active)

    def _replace_scale(self, j: int, members: np.ndarray) -> "LwsCoefficients":
        active = dict(self.active)
        members = np.asarray(members, dtype=np.int64)
        members.setflags(write=False)
        active[j] = members
        return replace(self, active=active)

    def with_active(self, j: int, ks: Iterable[int]) -> "LwsCoefficients":
        if not 0 <= j <= self.j_max:
            raise InvalidParameterError(f"scale {j} outside 0..{self.j_max}")
        ks = np.asarray(list(ks), dtype=np.int64)
        cover = build_cover(self.spec, j)
        outside = [int(k) for k in ks if not cover.contains(int(k))]
        if outside:
            raise DomainError(f"positions {outside[:8]} are not in I_{j}")
        return self._replace_scale(j, np.union1d(self.at(j), ks))

    def without(self, j: int, ks: Iterable[int]) -> "LwsCoefficients":
        ks = np.asarray(list(ks), dtype=np.int64)
        return self._replace_scale(j, np.setdiff1d(self.at(j), ks))

    def without_subtree(self, j: int, ks: Iterable[int]) -> "LwsCoefficients":
        """Zero every coefficient at scales >= j inside the intervals (j, k)."""
        roots = np.asarray(list(ks), dtype=np.int64)
        out = self
        for level in range(j, self.j_max + 1):
            members = out.at(level)
            keep = ~np.isin(members >> (level - j), roots)
            out = out._replace_scale(level, members[keep])
        return out


def active_at(spec: FractalSpec, params: LwsParams, j: int, *,
              max_scale: int | None = None, threads: int | None = None) -> np.ndarray:
    """A_j: the Bernoulli(p_j) draw over I_j for ``params.seed``."""
    p = activation_probability(params.H, params.eta, j)
    members = build_cover(spec, j, max_scale=max_scale, threads=threads).indices
    if p >= 1.0:
        return members
    if p == 0.0:
        return members[:0]
    draws = concat_blocks(lambda block: uniforms(params.seed, j, block), members, threads)
    return members[draws < p]


def synthesize(
    spec: FractalSpec,
    params: LwsParams,
    *,
    max_scale: int | None = None,
    threads: int | None = None,
) -> LwsCoefficients:
    """Draw A_j for every scale j <= params.j_max."""
    limit = resolve_max_scale(max_scale)
    if params.j_max > limit:
        raise ScaleOverflowError(params.j_max, limit)
    if params.eta >= params.H:
        raise InvalidParameterError(f"lacunarity eta={params.eta} must be below H={params.H}")
    active = {}
    for j in range(params.j_max + 1):
        members = active_at(spec, params, j, max_scale=max_scale, threads=threads)
        members.setflags(write=False)
        active[j] = members
    coeffs = LwsCoefficients(spec=spec, alpha=params.alpha, j_max=params.j_max,
                             active=active, params=params)
    logger.debug(f"synthesized {coeffs.total} active coefficients up to j={params.j_max}")
    return coeffs


@dataclass(frozen=True)
class RhoEstimate:
    slope: float
    window: tuple[int, int]
    residual: float
    counts: list[tuple[int, int]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "slope": self.slope,
            "window": list(self.window),
            "residual": self.residual,
            "counts": [list(c) for c in self.counts],
        }


def longest_run(mask: Sequence[bool]) -> tuple[int, int] | None:
    """Longest run of True entries as (start, stop) positions; later runs win ties."""
    best: tuple[int, int] | None = None
    start = None
    for pos, flag in enumerate(list(mask) + [False]):
        if flag and start is None:
            start = pos
        elif not flag and start is not None:
            if best is None or pos - start >= best[1] - best[0]:
                best = (start, pos)
            start = None
    return best


def rho_hat(coeffs: LwsCoefficients, min_scales: int = 4) -> RhoEstimate:
    """Slope of log2 #A_j against j over the longest run of nonempty scales."""
    counts = coeffs.counts()
    run = longest_run([c > 0 for _, c in counts])
    if run is None or run[1] - run[0] < min_scales:
        raise UndefinedDimensionError(
            f"need {min_scales} consecutive nonempty scales, got {0 if run is None else run[1] - run[0]}"
        )
    window = counts[run[0]:run[1]]
    fit: LogLogFit = fit_slope([j for j, _ in window], [math.log2(c) for _, c in window])
    return RhoEstimate(slope=fit.slope, window=fit.window, residual=fit.residual, counts=counts)


def render_haar(coeffs: LwsCoefficients, grid_depth: int, *, max_scale: int | None = None) -> np.ndarray:
    """Sample sum_j sum_{k in A_j} 2^{-alpha j} psi(2^j x - k) at x = i 2^-grid_depth.

    psi is the Haar wavelet: 1 on [0, 1/2), -1 on [1/2, 1).
    """
    limit = resolve_max_scale(max_scale)
    if grid_depth > limit:
        raise ScaleOverflowError(grid_depth, limit, what="grid depth")
    if grid_depth < coeffs.j_max:
        raise InvalidParameterError(f"grid depth {grid_depth} is below j_max={coeffs.j_max}")
    n = 1 << grid_depth
    diff = np.zeros(n + 1, dtype=np.float64)
    for j in range(coeffs.j_max + 1):
        members = coeffs.at(j)
        if members.size == 0:
            continue
        c = coeffs.magnitude(j)
        width = 1 << (grid_depth - j)
        start = members << (grid_depth - j)
        if width == 1:
            diff += c * np.bincount(start, minlength=n + 1)
            diff -= c * np.bincount(start + 1, minlength=n + 1)
            continue
        half = width >> 1
        diff += c * np.bincount(start, minlength=n + 1)
        diff -= 2 * c * np.bincount(start + half, minlength=n + 1)
        diff += c * np.bincount(start + width, minlength=n + 1)
    return np.cumsum(diff[:n])


@dataclass(frozen=True)
class GofResult:
    j: int
    trials: int
    p: float
    seeds: int
    statistic: float
    pvalue: float
    bins: int
    mean_count: float

    def passed(self, significance: float = 0.01) -> bool:
        return self.pvalue >= significance

    def to_dict(self) -> dict[str, Any]:
        return {
            "j": self.j,
            "trials": self.trials,
            "p": self.p,
            "seeds": self.seeds,
            "statistic": self.statistic,
            "pvalue": self.pvalue,
            "bins": self.bins,
            "mean_count": self.mean_count,
            "expected_mean": self.trials * self.p,
        }


def binomial_gof(
    spec: FractalSpec,
    params: LwsParams,
    j: int,
    seeds: Sequence[int],
    *,
    bins: int = 8,
) -> GofResult:
    """Chi-square test of #A_j over ``seeds`` against Binomial(#I_j, p_j).

    Bins are cut at binomial quantiles so each has a comparable expected count.
    """
    trials = cover_count(spec, j)
    p = activation_probability(params.H, params.eta, j)
    observed_counts = np.array(
        [active_at(spec, params.model_copy(update={"seed": s}), j).size for s in seeds]
    )
    edges = np.unique(binom.ppf(np.linspace(0, 1, bins + 1)[1:-1], trials, p))
    cdf = binom.cdf(edges, trials, p)
    probs = np.diff(np.concatenate([[0.0], cdf, [1.0]]))
    observed = np.bincount(np.searchsorted(edges, observed_counts, side="left"),
                           minlength=probs.size)
    expected = probs * len(seeds)
    stat, pvalue = chisquare(observed, expected * observed.sum() / expected.sum())
    return GofResult(
        j=j,
        trials=trials,
        p=p,
        seeds=len(seeds),
        statistic=float(stat),
        pvalue=float(pvalue),
        bins=int(probs.size),
        mean_count=float(observed_counts.mean()),
    )
