from __future__ import annotations

from typing import Any

from ..covers import build_cover, natural_step, theoretical_dimension
from ..dimension import audit_count_bounds, estimate_box_dim
from ..duplication import FD, SD, DuplicationParams, audit_card_bounds, classify
from ..formats import sanitize
from ..quasicantor import audit_theorem1, build_ladder, prune
from .base import listed, load_spec, resolve_H


def cover(spec: dict[str, Any], j: int, max_scale: int | None = None) -> dict[str, Any]:
    """Member indices of the level cover I_j."""
    fractal = load_spec(spec)
    level = build_cover(fractal, j, max_scale=max_scale)
    return {
        "j": j,
        "count": level.count,
        "exactness": level.exactness,
        "theoretical_dimension": theoretical_dimension(fractal),
        "indices": listed(level.indices),
    }


def dims(
    spec: dict[str, Any],
    j_min: int,
    j_max: int,
    step: int | None = None,
    H: float | None = None,
    eps: float | None = None,
    max_scale: int | None = None,
) -> dict[str, Any]:
    """Box-dimension regression, plus the count-bound audit when ``eps`` is given."""
    fractal = load_spec(spec)
    step = step or natural_step(fractal)
    out = estimate_box_dim(fractal, j_min, j_max, step=step, max_scale=max_scale).to_dict()
    if eps is not None:
        audit = audit_count_bounds(fractal, resolve_H(fractal, H), eps, (j_min, j_max),
                                   step=step, max_scale=max_scale)
        out["audit"] = audit.to_dict()
    return sanitize(out)


def duplication(
    spec: dict[str, Any],
    j: int,
    beta: float,
    eps: float,
    H: float | None = None,
    max_scale: int | None = None,
) -> dict[str, Any]:
    """SD/ND/FD classification at scale j with the cardinality audit.

    Returns:
        {"summary": {...}, "audit": {...}, "sd": {...}, "fd": {...}}
    """
    fractal = load_spec(spec)
    params = DuplicationParams(beta=beta, eps=eps, H=resolve_H(fractal, H))
    report = classify(fractal, j, params, max_scale=max_scale)
    audit = audit_card_bounds(report, params)
    return sanitize({
        "summary": report.summary(),
        "audit": audit.to_dict(),
        "sd": listed(report.members(SD)),
        "fd": listed(report.members(FD)),
    })


def quasicantor(
    spec: dict[str, Any],
    J: int,
    b: float,
    eps: float,
    H: float | None = None,
    max_scale: int | None = None,
    ell0: int | None = None,
    mode: str | None = None,
) -> dict[str, Any]:
    """Prune the covers along the ladder J, J(1+b), ... and audit the result."""
    fractal = load_spec(spec)
    ladder = build_ladder(J, b, max_scale)
    qc = prune(fractal, ladder, resolve_H(fractal, H), eps, mode=mode, max_scale=max_scale)
    audit = audit_theorem1(qc, ell0)
    return sanitize({
        "rungs": list(ladder.rungs),
        "ladder": qc.summary(),
        "audit": audit.to_dict(),
    })
