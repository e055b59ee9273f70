"""Quasi-Cantor subsets of a support along a geometric scale ladder.

Rungs j_0 < j_1 < ... < j_L follow floor((1 + b)^i J). At each rung the
covered intervals are pruned bottom-up:

    T_0   the cover itself
    T_1   normal-duplication intervals, children counted one rung deeper
    T_l   members of T_{l-1} with at least 2^{D (H - 5 eps / b)} children in
          T_{l-1} one rung deeper, D being the gap between the two rungs

T_inf at rung i is the deepest computable T_l (l = L - i). K is the nested
family of T_inf members whose whole ancestor chain survives from rung ell0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from .config import get_settings, resolve_max_scale
from .covers import FractalSpec, LevelCover, build_cover
from .duplication import ND, classify_counts
from .errors import InvalidParameterError, LadderTooShortError

logger = logging.getLogger("dyadic")

_TOL = 1e-12

RecursionMode = Literal["previous", "fixed-point", "unpruned"]


@dataclass(frozen=True)
class ScaleLadder:
    J: int
    b: float
    rungs: tuple[int, ...]

    @property
    def L(self) -> int:
        return len(self.rungs) - 1

    def gap(self, i: int, lookahead: int = 1) -> int:
        return self.rungs[i + lookahead] - self.rungs[i]


def build_ladder(
    J: int, b: float, max_scale: int | None = None, *, max_rungs: int | None = None
) -> ScaleLadder:
    """Rungs floor((1+b)^i J) up to ``max_scale``, duplicates dropped."""
    if J < 1:
        raise InvalidParameterError(f"base scale J must be >= 1, got {J}")
    if not 0 < b < 1:
        raise InvalidParameterError(f"ladder ratio b must lie in (0, 1), got {b}")
    limit = resolve_max_scale(max_scale)

    raw: list[int] = []
    i = 0
    while True:
        rung = math.floor((1 + b) ** i * J + 1e-9)
        if rung > limit:
            break
        raw.append(rung)
        i += 1
    rungs = tuple(dict.fromkeys(raw))
    if len(rungs) < len(raw):
        logger.warning(
            f"ladder J={J}, b={b}: {len(raw) - len(rungs)} flooring collisions dropped"
        )
    if max_rungs is not None:
        rungs = rungs[:max_rungs]
    if len(rungs) < 3:
        raise LadderTooShortError(
            f"ladder J={J}, b={b} has only {len(rungs)} rungs below scale {limit}; need 3.\n"
            f"SOLUTION: Lower J, raise b, or raise DYADIC_MAX_SCALE."
        )
    return ScaleLadder(J=J, b=b, rungs=rungs)


def select_ladder_ratio(H: float, eta: float, n: int, max_ell: int = 1000) -> tuple[float, int, float]:
    """Ladder ratio realizing (1 + beta_n) = (1 + b_n)^ell.

    beta_n = (H + 1/n)/eta - 1; ell is the smallest integer with
    b_n^2 < 1/(10 n beta_n) and b_n H - 5 b_n^2 > 0.

    Returns:
        (b_n, ell, eps_n) with eps_n = b_n^2.
    """
    if not 0 < eta < H:
        raise InvalidParameterError(f"need 0 < eta < H, got eta={eta}, H={H}")
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    beta = (H + 1 / n) / eta - 1
    for ell in range(1, max_ell + 1):
        b = (1 + beta) ** (1 / ell) - 1
        if b < 1 and b * b < 1 / (10 * n * beta) and b * H - 5 * b * b > 0:
            return b, ell, b * b
    raise InvalidParameterError(f"no ladder ratio found for H={H}, eta={eta}, n={n}")


def _children_in(parents: np.ndarray, children: np.ndarray, shift: int) -> np.ndarray:
    """Per-parent number of ``children`` (sorted) below each parent index."""
    lo = np.searchsorted(children, parents << shift)
    hi = np.searchsorted(children, (parents + 1) << shift)
    return hi - lo


@dataclass(frozen=True, eq=False)
class QuasiCantorLadder:
    ladder: ScaleLadder
    H: float
    eps: float
    covers: list[LevelCover] = field(repr=False)
    T: list[list[np.ndarray]] = field(repr=False)
    T_inf: list[np.ndarray] = field(repr=False)
    stabilized_at: list[int | None]
    mode: RecursionMode = "previous"

    @property
    def b(self) -> float:
        return self.ladder.b

    @property
    def threshold_exponent(self) -> float:
        """H - 5 eps / b: per unit of scale gap."""
        return self.H - 5 * self.eps / self.b

    def stabilized(self, i: int) -> bool:
        return self.stabilized_at[i] is not None

    def U(self, i: int, ell: int) -> np.ndarray:
        """Intervals dropped at depth ``ell`` (>= 2) on rung ``i``."""
        if not 2 <= ell < len(self.T[i]):
            raise InvalidParameterError(f"U_{ell} undefined on rung {i}")
        return np.setdiff1d(self.T[i][ell - 1], self.T[i][ell], assume_unique=True)

    def summary(self) -> list[dict[str, Any]]:
        return [
            {
                "rung": i,
                "j": j,
                "cover": int(self.covers[i].count),
                "depths": [int(t.size) for t in self.T[i]],
                "T_inf": int(self.T_inf[i].size),
                "stabilized_at": self.stabilized_at[i],
            }
            for i, j in enumerate(self.ladder.rungs)
        ]


def _check_prune_params(ladder: ScaleLadder, H: float, eps: float) -> None:
    if eps <= 0:
        raise InvalidParameterError(f"eps must be positive, got {eps}")
    if ladder.b * H - 5 * eps <= 0:
        raise InvalidParameterError(
            f"need b H - 5 eps > 0, got b={ladder.b}, H={H}, eps={eps}.\n"
            f"SOLUTION: Lower eps below b H / 5 = {ladder.b * H / 5:.6g}."
        )


def _build_covers(spec: FractalSpec, ladder: ScaleLadder, max_scale: int | None,
                  threads: int | None) -> list[LevelCover]:
    return [build_cover(spec, j, max_scale=max_scale, threads=threads) for j in ladder.rungs]


def _normal_rung(ladder: ScaleLadder, covers: list[LevelCover], i: int,
                 H: float, eps: float) -> np.ndarray:
    gap = ladder.gap(i)
    m = max(1.0, ladder.b)
    counts = _children_in(covers[i].indices, covers[i + 1].indices, gap)
    classes = classify_counts(counts, gap * H, gap * 4 * m * eps / ladder.b)
    return covers[i].indices[classes == ND]


def _keep_reproducing(ladder: ScaleLadder, i: int, parents: np.ndarray,
                      children: np.ndarray, exponent: float) -> np.ndarray:
    gap = ladder.gap(i)
    counts = _children_in(parents, children, gap)
    with np.errstate(divide="ignore"):
        ok = np.log2(counts.astype(np.float64)) >= gap * exponent - _TOL
    return parents[ok]


def prune(
    spec: FractalSpec,
    ladder: ScaleLadder,
    H: float,
    eps: float,
    *,
    mode: Literal["previous", "fixed-point"] | None = None,
    max_scale: int | None = None,
    threads: int | None = None,
) -> QuasiCantorLadder:
    """Run the T_l recursion on every rung of ``ladder``.

    Args:
        spec: Support.
        ladder: Scale ladder (see build_ladder).
        H: Dimension of the support, supplied by the caller.
        eps: Tolerance; must satisfy b H - 5 eps > 0.
        mode: ``previous`` builds T_l from T_{l-1} one rung deeper;
            ``fixed-point`` keeps pruning against the current deeper set until
            nothing changes. Defaults to DYADIC_QC_RECURSION.
    """
    _check_prune_params(ladder, H, eps)
    mode = mode or get_settings().qc_recursion
    covers = _build_covers(spec, ladder, max_scale, threads)
    L = ladder.L
    exponent = H - 5 * eps / ladder.b

    T: list[list[np.ndarray]] = [[cover.indices] for cover in covers]
    for i in range(L):
        T[i].append(_normal_rung(ladder, covers, i, H, eps))

    if mode == "previous":
        # T_l on rung i needs T_{l-1} on rung i+1, so fill depth by depth
        for ell in range(2, L + 1):
            for i in range(0, L - ell + 1):
                T[i].append(_keep_reproducing(ladder, i, T[i][ell - 1], T[i + 1][ell - 1], exponent))
    elif mode == "fixed-point":
        current = [T[i][1] for i in range(L)] + [T[L][0]]
        changed = True
        while changed:
            changed = False
            for i in range(L - 1, -1, -1):
                kept = _keep_reproducing(ladder, i, current[i], current[i + 1], exponent)
                if kept.size != current[i].size:
                    current[i] = kept
                    changed = True
        for i in range(L):
            T[i].append(current[i])
    else:
        raise InvalidParameterError(f"unknown recursion mode {mode!r}")

    stabilized_at: list[int | None] = []
    for i in range(L + 1):
        # depths are nested, so equal sizes mean equal sets
        depths = T[i]
        final = depths[-1].size
        hit = next(
            (ell for ell in range(1, len(depths) - 1)
             if all(d.size == final for d in depths[ell:])),
            None,
        )
        stabilized_at.append(hit)
        if hit is None and i < L - 1:
            logger.warning(f"rung {i} (j={ladder.rungs[i]}) still shrinking at depth {len(depths) - 1}")

    qc = QuasiCantorLadder(
        ladder=ladder,
        H=H,
        eps=eps,
        covers=covers,
        T=T,
        T_inf=[depths[-1] for depths in T],
        stabilized_at=stabilized_at,
        mode=mode,
    )
    empty = [i for i, t in enumerate(qc.T_inf) if t.size == 0]
    if empty:
        logger.warning(f"T_inf empty on rungs {empty}; K is empty from there on")
    return qc


def unpruned(
    spec: FractalSpec,
    ladder: ScaleLadder,
    H: float,
    eps: float,
    *,
    max_scale: int | None = None,
    threads: int | None = None,
) -> QuasiCantorLadder:
    """A ladder whose T_inf sets are the raw covers, for auditing any cover."""
    if eps <= 0:
        raise InvalidParameterError(f"eps must be positive, got {eps}")
    covers = _build_covers(spec, ladder, max_scale, threads)
    return QuasiCantorLadder(
        ladder=ladder,
        H=H,
        eps=eps,
        covers=covers,
        T=[[c.indices] for c in covers],
        T_inf=[c.indices for c in covers],
        stabilized_at=[None] * len(covers),
        mode="unpruned",
    )


@dataclass(frozen=True, eq=False)
class KSet:
    """Per-rung index sets of K, from rung ``ell0`` down to the last rung."""

    ladder: ScaleLadder
    ell0: int
    sets: list[np.ndarray] = field(repr=False)

    def at(self, i: int) -> np.ndarray:
        if i < self.ell0:
            raise InvalidParameterError(f"K starts at rung {self.ell0}, asked for {i}")
        return self.sets[i - self.ell0]

    @property
    def empty(self) -> bool:
        return any(s.size == 0 for s in self.sets)

    def counts(self) -> list[tuple[int, int]]:
        return [(self.ladder.rungs[self.ell0 + n], int(s.size)) for n, s in enumerate(self.sets)]


def extract_K(qc: QuasiCantorLadder, ell0: int) -> KSet:
    """Keep T_inf members whose ancestors survive on every rung from ``ell0``."""
    ladder = qc.ladder
    if not 0 <= ell0 <= ladder.L:
        raise InvalidParameterError(f"ell0={ell0} outside rungs 0..{ladder.L}")
    sets = [qc.T_inf[ell0]]
    for i in range(ell0, ladder.L):
        below = qc.T_inf[i + 1]
        parents = below >> ladder.gap(i)
        sets.append(below[np.isin(parents, sets[-1], assume_unique=False)])
    return KSet(ladder=ladder, ell0=ell0, sets=sets)


def _count_margin(j: int, count: int, H: float, eps: float) -> float:
    lc = math.log2(count) if count else float("-inf")
    return min(lc - j * (H - eps), j * (H + eps) - lc)


def default_ell0(qc: QuasiCantorLadder) -> int:
    """First rung from which every count of K lies within 2^{j(H -+ eps)}.

    Uses the same K sets that audit_theorem1 counts; falls back to rung 0.
    """
    for i in range(qc.ladder.L + 1):
        K = extract_K(qc, i)
        if all(_count_margin(j, n, qc.H, qc.eps) >= -_TOL for j, n in K.counts()):
            return i
    return 0


@dataclass(frozen=True)
class RungCount:
    rung: int
    j: int
    count: int
    margin: float

    @property
    def passed(self) -> bool:
        return self.margin >= -_TOL


@dataclass(frozen=True)
class ReproductionFlag:
    rung: int
    k: int
    lookahead: int
    margin: float


@dataclass(frozen=True)
class QuasiCantorAudit:
    ell0: int
    counts: list[RungCount]
    worst_count_margin: float
    worst_reproduction_margin: float
    flagged: list[ReproductionFlag]
    empty: bool = False

    @property
    def count_passed(self) -> bool:
        return not self.empty and all(r.passed for r in self.counts)

    @property
    def reproduction_passed(self) -> bool:
        return not self.empty and not self.flagged

    @property
    def all_passed(self) -> bool:
        return self.count_passed and self.reproduction_passed

    def to_dict(self) -> dict[str, Any]:
        def finite(x: float) -> float | None:
            return x if math.isfinite(x) else None

        return {
            "ell0": self.ell0,
            "empty": self.empty,
            "count_passed": self.count_passed,
            "reproduction_passed": self.reproduction_passed,
            "worst_count_margin_log2": finite(self.worst_count_margin),
            "worst_reproduction_margin_log2": finite(self.worst_reproduction_margin),
            "rungs": [
                {"rung": r.rung, "j": r.j, "count": r.count,
                 "margin_log2": finite(r.margin), "passed": r.passed}
                for r in self.counts
            ],
            "flagged": [
                {"rung": f.rung, "k": f.k, "lookahead": f.lookahead, "margin_log2": finite(f.margin)}
                for f in self.flagged
            ],
        }


def audit_theorem1(qc: QuasiCantorLadder, ell0: int | None = None) -> QuasiCantorAudit:
    """Check per-rung counts of K and descendant reproduction at every look-ahead.

    Counts must satisfy 2^{j(H-eps)} <= #K_j <= 2^{j(H+eps)}. Every member of
    K at rung i must have at least 2^{(j_{i+l} - j_i)(H - 5 eps / b)}
    descendants in K at rung i + l, for every l with i + l <= L.
    """
    if ell0 is None:
        ell0 = default_ell0(qc)
    K = extract_K(qc, ell0)
    ladder = qc.ladder
    if K.sets[0].size == 0:
        logger.warning(f"K is empty from rung {ell0}; nothing to audit")
        return QuasiCantorAudit(ell0, [], float("-inf"), float("-inf"), [], empty=True)

    counts = []
    for i in range(ell0, ladder.L + 1):
        j = ladder.rungs[i]
        count = int(K.at(i).size)
        counts.append(RungCount(i, j, count, _count_margin(j, count, qc.H, qc.eps)))

    exponent = qc.threshold_exponent
    worst = float("inf")
    flagged: list[ReproductionFlag] = []
    for i in range(ell0, ladder.L):
        parents = K.at(i)
        for ahead in range(1, ladder.L - i + 1):
            gap = ladder.gap(i, ahead)
            found = _children_in(parents, K.at(i + ahead), gap)
            with np.errstate(divide="ignore"):
                margins = np.log2(found.astype(np.float64)) - gap * exponent
            if margins.size:
                worst = min(worst, float(margins.min()))
            for pos in np.flatnonzero(margins < -_TOL):
                flagged.append(ReproductionFlag(i, int(parents[pos]), ahead, float(margins[pos])))

    audit = QuasiCantorAudit(
        ell0=ell0,
        counts=counts,
        worst_count_margin=min(r.margin for r in counts),
        worst_reproduction_margin=worst,
        flagged=flagged,
    )
    logger.debug(
        f"quasi-Cantor audit from rung {ell0}: counts {'ok' if audit.count_passed else 'FAIL'}, "
        f"{len(flagged)} reproduction flags"
    )
    return audit
