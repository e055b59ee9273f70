"""Upper-box dimension from cover counts, plus the two-sided count audit."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.stats import linregress

from .config import resolve_max_scale
from .covers import FractalSpec, cover_count
from .errors import InvalidParameterError, ScaleOverflowError, UndefinedDimensionError

logger = logging.getLogger("dyadic")


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    residual: float
    window: tuple[int, int]

    @classmethod
    def empty(cls) -> "LogLogFit":
        return cls(float("-inf"), float("nan"), float("nan"), (0, -1))


def fit_slope(x: Sequence[float], y: Sequence[float]) -> LogLogFit:
    """Least-squares slope of y against x with the max absolute residual."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.size < 2:
        raise UndefinedDimensionError(f"need at least 2 points for a slope, got {xs.size}")
    fit = linregress(xs, ys)
    residual = float(np.max(np.abs(ys - (fit.intercept + fit.slope * xs))))
    return LogLogFit(float(fit.slope), float(fit.intercept), residual, (int(xs[0]), int(xs[-1])))


@dataclass(frozen=True)
class DimensionEstimate:
    H_hat: float
    j_range: tuple[int, int]
    residual: float
    per_level_counts: list[tuple[int, int]]
    limsup_estimate: float
    slope: float
    step: int = 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "H_hat": self.H_hat,
            "j_range": list(self.j_range),
            "step": self.step,
            "slope": self.slope,
            "residual": self.residual,
            "limsup_estimate": self.limsup_estimate,
            "per_level_counts": [list(p) for p in self.per_level_counts],
        }


def _scales(j_min: int, j_max: int, step: int, max_scale: int | None) -> list[int]:
    limit = resolve_max_scale(max_scale)
    if j_max > limit:
        raise ScaleOverflowError(j_max, limit)
    if not 0 <= j_min < j_max:
        raise InvalidParameterError(f"need 0 <= j_min < j_max, got [{j_min}, {j_max}]")
    if step < 1:
        raise InvalidParameterError(f"step must be positive, got {step}")
    return list(range(j_min, j_max + 1, step))


def estimate_box_dim(
    spec: FractalSpec,
    j_min: int,
    j_max: int,
    *,
    step: int = 1,
    max_scale: int | None = None,
) -> DimensionEstimate:
    """Regress log2 #I_j on j over [j_min, j_max] (every ``step``-th scale).

    Raises:
        UndefinedDimensionError: a cover in the window is empty, or fewer
            than two scales fall in the window.
    """
    scales = _scales(j_min, j_max, step, max_scale)
    counts = [cover_count(spec, j, max_scale=max_scale) for j in scales]
    if min(counts) == 0:
        empty = [j for j, c in zip(scales, counts) if c == 0]
        raise UndefinedDimensionError(f"empty cover at scales {empty}; dimension undefined")
    logs = np.log2(np.asarray(counts, dtype=np.float64))
    fit = fit_slope(scales, logs)
    ratios = [lc / j for j, lc in zip(scales, logs) if j > 0]
    estimate = DimensionEstimate(
        H_hat=float(min(1.0, max(0.0, fit.slope))),
        j_range=(scales[0], scales[-1]),
        residual=fit.residual,
        per_level_counts=list(zip(scales, counts)),
        limsup_estimate=float(max(ratios)) if ratios else float("nan"),
        slope=fit.slope,
        step=step,
    )
    logger.debug(f"box dimension over {estimate.j_range} step {step}: {estimate.H_hat:.6f}")
    return estimate


@dataclass(frozen=True)
class CountAuditRow:
    j: int
    count: int
    log2count: float
    bound_low: float
    bound_high: float
    passed: bool


@dataclass(frozen=True)
class CountAudit:
    H: float
    eps: float
    rows: list[CountAuditRow] = field(default_factory=list)
    first_passing: int | None = None

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def failures(self) -> list[int]:
        return [r.j for r in self.rows if not r.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "H": self.H,
            "eps": self.eps,
            "all_passed": self.all_passed,
            "first_passing": self.first_passing,
            "failures": self.failures,
        }


def audit_count_bounds(
    spec: FractalSpec,
    H: float,
    eps: float,
    j_range: tuple[int, int],
    *,
    step: int = 1,
    max_scale: int | None = None,
) -> CountAudit:
    """Check 2^{j(H-eps)} <= #I_j <= 2^{j(H+eps)} scale by scale."""
    if eps <= 0:
        raise InvalidParameterError(f"eps must be positive, got {eps}")
    scales = _scales(j_range[0], j_range[1], step, max_scale)
    rows = []
    for j in scales:
        count = cover_count(spec, j, max_scale=max_scale)
        lc = math.log2(count) if count else float("-inf")
        low, high = j * (H - eps), j * (H + eps)
        passed = low - 1e-12 <= lc <= high + 1e-12
        rows.append(CountAuditRow(j, count, lc, 2.0 ** low, 2.0 ** high, passed))

    first = None
    for row in reversed(rows):
        if not row.passed:
            break
        first = row.j
    return CountAudit(H=H, eps=eps, rows=rows, first_passing=first)
