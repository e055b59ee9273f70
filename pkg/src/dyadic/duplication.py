"""Slow / normal / fast duplication of covered intervals.

A covered interval at scale j is compared with the number of its covered
descendants at scale floor((1+beta) j):

    SD   count <  2^{j(beta H - 4 m eps)}
    FD   count >  2^{j(beta H + 4 m eps)}
    ND   otherwise (both equalities land here)

with m = max(1, beta).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import resolve_max_scale
from .covers import FractalSpec, build_cover, child_counts
from .errors import InvalidParameterError, ScaleOverflowError

logger = logging.getLogger("dyadic")

SD, ND, FD = 0, 1, 2
CLASS_NAMES = {SD: "SD", ND: "ND", FD: "FD"}

_TOL = 1e-12


class DuplicationParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    beta: float = Field(gt=0)
    eps: float = Field(gt=0)
    H: float = Field(ge=0, le=1)

    @property
    def m(self) -> float:
        return max(1.0, self.beta)


def child_scale(j: int, beta: float) -> int:
    return math.floor((1 + beta) * j + 1e-9)


@dataclass(frozen=True, eq=False)
class DuplicationReport:
    j: int
    j_child: int
    params: DuplicationParams
    indices: np.ndarray
    child_counts: np.ndarray
    classes: np.ndarray
    child_total: int

    @property
    def counts(self) -> tuple[int, int, int, int]:
        """(#SD, #ND, #FD, #C_beta SD)."""
        sd = self.classes == SD
        return (
            int(np.count_nonzero(sd)),
            int(np.count_nonzero(self.classes == ND)),
            int(np.count_nonzero(self.classes == FD)),
            int(self.child_counts[sd].sum()),
        )

    def members(self, cls: int) -> np.ndarray:
        return self.indices[self.classes == cls]

    def class_of(self, k: int) -> str:
        pos = int(np.searchsorted(self.indices, k))
        if pos >= self.indices.size or self.indices[pos] != k:
            raise KeyError(k)
        return CLASS_NAMES[int(self.classes[pos])]

    def rows(self) -> list[tuple[int, int, int, str]]:
        return [
            (self.j, int(k), int(c), CLASS_NAMES[int(cls)])
            for k, c, cls in zip(self.indices, self.child_counts, self.classes)
        ]

    def summary(self) -> dict[str, Any]:
        n_sd, n_nd, n_fd, n_csd = self.counts
        return {
            "j": self.j,
            "j_child": self.j_child,
            "beta": self.params.beta,
            "eps": self.params.eps,
            "H": self.params.H,
            "SD": n_sd,
            "ND": n_nd,
            "FD": n_fd,
            "C_beta_SD": n_csd,
            "child_total": self.child_total,
        }


def classify_counts(
    counts: np.ndarray, delta_log: float, slack: float
) -> np.ndarray:
    """Classify children counts against 2^{delta_log -+ slack}."""
    with np.errstate(divide="ignore"):
        lc = np.log2(counts.astype(np.float64))
    classes = np.full(counts.shape, ND, dtype=np.int8)
    classes[lc < delta_log - slack - _TOL] = SD
    classes[lc > delta_log + slack + _TOL] = FD
    return classes


def classify(
    spec: FractalSpec,
    j: int,
    params: DuplicationParams,
    *,
    max_scale: int | None = None,
    threads: int | None = None,
) -> DuplicationReport:
    """Split I_j into SD / ND / FD by children counts at floor((1+beta) j)."""
    j_child = child_scale(j, params.beta)
    limit = resolve_max_scale(max_scale)
    if j_child > limit:
        raise ScaleOverflowError(j_child, limit, what="child scale")
    if j_child <= j:
        raise InvalidParameterError(
            f"child scale floor((1+{params.beta})*{j}) = {j_child} does not exceed j={j}"
        )
    parent = build_cover(spec, j, max_scale=max_scale, threads=threads)
    child = build_cover(spec, j_child, max_scale=max_scale, threads=threads)
    counts = child_counts(parent, child)
    classes = classify_counts(
        counts, j * params.beta * params.H, 4 * params.m * params.eps * j
    )
    report = DuplicationReport(
        j=j,
        j_child=j_child,
        params=params,
        indices=parent.indices,
        child_counts=counts,
        classes=classes,
        child_total=child.count,
    )
    logger.debug(f"classify j={j}->{j_child}: {report.summary()}")
    return report


@dataclass(frozen=True)
class BoundCheck:
    name: str
    passed: bool
    margin: float

    def to_dict(self) -> dict[str, Any]:
        margin = self.margin if math.isfinite(self.margin) else None
        return {"name": self.name, "passed": self.passed, "margin_log2": margin}


@dataclass(frozen=True)
class CardAudit:
    nd: BoundCheck
    fd: BoundCheck
    sd: BoundCheck
    sd_proof_margin: float

    @property
    def all_passed(self) -> bool:
        return self.nd.passed and self.fd.passed and self.sd.passed

    def to_dict(self) -> dict[str, Any]:
        return {
            "ND": self.nd.to_dict(),
            "FD": self.fd.to_dict(),
            "C_beta_SD": self.sd.to_dict(),
            "C_beta_SD_proof_margin_log2": (
                self.sd_proof_margin if math.isfinite(self.sd_proof_margin) else None
            ),
            "all_passed": self.all_passed,
        }


def _log2(n: int) -> float:
    return math.log2(n) if n > 0 else float("-inf")


def audit_card_bounds(report: DuplicationReport, params: DuplicationParams) -> CardAudit:
    """Check the ND, FD and C_beta SD cardinality bounds; margins in log2 units."""
    if report.params != params:
        raise InvalidParameterError("report was classified with different parameters")
    j, H, eps, beta, m = report.j, params.H, params.eps, params.beta, params.m
    n_sd, n_nd, n_fd, n_csd = report.counts

    nd_log = _log2(n_nd)
    nd_margin = min(nd_log - j * (H - 2 * eps), j * (H + eps) - nd_log)
    fd_margin = j * (H - 2 * eps) - _log2(n_fd)
    sd_margin = j * (1 + beta) * (H - 3 * m * eps) - _log2(n_csd)
    sd_proof = j * ((1 + beta) * H - 3 * m * eps) - _log2(n_csd)

    return CardAudit(
        nd=BoundCheck("ND", nd_margin >= -_TOL, nd_margin),
        fd=BoundCheck("FD", fd_margin >= -_TOL, fd_margin),
        sd=BoundCheck("C_beta_SD", sd_margin >= -_TOL, sd_margin),
        sd_proof_margin=sd_proof,
    )
