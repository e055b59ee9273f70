"""Wavelet leaders, pointwise Hölder estimates and spectrum estimators.

The leader of (j, k) is the largest coefficient magnitude over every
(j', k') with j <= j' <= j_max whose interval sits inside the tripled
interval 3(j, k) = [(k-1) 2^-j, (k+2) 2^-j), clipped to [0, 1).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Literal, Sequence

import numpy as np

from .config import get_settings
from .covers import build_cover
from .dimension import fit_slope
from .errors import IncompatibleLadderError, InvalidParameterError
from .lws import LwsCoefficients, longest_run
from .quasicantor import QuasiCantorLadder, default_ell0, extract_K

logger = logging.getLogger("dyadic")

NEG_INF = float("-inf")

SpectrumMethod = Literal["natural-cover", "coarse-leader", "level-set"]


def _dilate(bits: np.ndarray) -> np.ndarray:
    """Cells whose 3-window meets ``bits``."""
    out = bits.copy()
    out[1:] |= bits[:-1]
    out[:-1] |= bits[1:]
    return out


@dataclass(frozen=True, eq=False)
class LeaderField:
    j_max: int
    alpha: float
    d: list[np.ndarray] = field(repr=False)
    halo: list[int] = field(repr=False)
    support: list[int] = field(repr=False)

    def at(self, j: int) -> np.ndarray:
        return self.d[j]


def compute_leaders(coeffs: LwsCoefficients, j_max: int | None = None) -> LeaderField:
    """Bottom-up max propagation, then a max over each 3-window."""
    j_max = coeffs.j_max if j_max is None else j_max
    if not 0 <= j_max <= coeffs.j_max:
        raise InvalidParameterError(f"j_max={j_max} outside 0..{coeffs.j_max}")

    subtree: list[np.ndarray] = [np.zeros(0)] * (j_max + 1)
    below = None
    for j in range(j_max, -1, -1):
        own = np.zeros(1 << j, dtype=np.float64)
        own[coeffs.at(j)] = coeffs.magnitude(j)
        if below is not None:
            own = np.maximum(own, np.maximum(below[0::2], below[1::2]))
        subtree[j] = own
        below = own

    d = []
    halo, support = [], []
    for j, s in enumerate(subtree):
        lead = s.copy()
        lead[1:] = np.maximum(lead[1:], s[:-1])
        lead[:-1] = np.maximum(lead[:-1], s[1:])
        lead.setflags(write=False)
        d.append(lead)
        bits = build_cover(coeffs.spec, j).bits
        halo.append(int(np.count_nonzero(_dilate(bits))))
        support.append(int(np.count_nonzero(bits)))
    return LeaderField(j_max=j_max, alpha=coeffs.alpha, d=d, halo=halo, support=support)


@dataclass(frozen=True, eq=False)
class HolderField:
    j_min: int
    j_max: int
    h_cap: float
    h: np.ndarray = field(repr=False)
    vanishing: np.ndarray = field(repr=False)

    def histogram(self, bins: int = 50) -> tuple[np.ndarray, np.ndarray]:
        counts, edges = np.histogram(self.h, bins=bins, range=(0.0, self.h_cap))
        return edges, counts


def estimate_holder(leaders: LeaderField, j_min: int = 3, *, h_cap: float | None = None) -> HolderField:
    """h(x) = min over j in [j_min, j_max] of -log2 d_j(x) / j per finest cell."""
    if j_min < 2:
        raise InvalidParameterError(f"j_min must be >= 2, got {j_min}")
    if j_min > leaders.j_max:
        raise InvalidParameterError(f"j_min={j_min} exceeds j_max={leaders.j_max}")
    cap = get_settings().h_cap if h_cap is None else h_cap
    n = 1 << leaders.j_max
    h = np.full(n, cap, dtype=np.float64)
    vanishing = np.ones(n, dtype=bool)
    for j in range(j_min, leaders.j_max + 1):
        dj = np.repeat(leaders.at(j), 1 << (leaders.j_max - j))
        nonzero = dj > 0
        ratio = np.full(n, cap, dtype=np.float64)
        ratio[nonzero] = -np.log2(dj[nonzero]) / j
        np.minimum(h, ratio, out=h)
        vanishing &= ~nonzero
    np.clip(h, 0.0, cap, out=h)
    h[vanishing] = cap
    return HolderField(j_min=j_min, j_max=leaders.j_max, h_cap=cap, h=h, vanishing=vanishing)


# --- window regression shared by the spectrum and limsup estimators ---

@dataclass(frozen=True)
class WindowFit:
    value: float
    window: tuple[int, int] | None
    residual: float
    flag: Literal["ok", "saturated", "empty", "single-scale"]


def occupancy_corrected(count: float, population: float) -> float:
    """Expected number of throws behind ``count`` distinct hits among ``population`` cells."""
    if count >= population:
        return float("inf")
    return -population * math.log1p(-count / population)


def _window_fit(
    scales: Sequence[int],
    xs: Sequence[float],
    counts: Sequence[int],
    populations: Sequence[int],
    desaturate: bool,
    resolutions: Sequence[int] | None = None,
) -> WindowFit:
    """Slope of log2 counts against ``xs`` over the longest unsaturated run.

    When every scale is saturated the counts only see the support, so the
    support's own slope (log2 population against ``resolutions``) is reported.
    """
    if not scales or all(c == 0 for c in counts):
        return WindowFit(NEG_INF, None, float("nan"), "empty")
    saturated = [c >= p for c, p in zip(counts, populations)]
    usable = [c > 0 and not s for c, s in zip(counts, saturated)]
    run = longest_run(usable)
    if run is None:
        rx = xs if resolutions is None else resolutions
        if len(set(rx)) >= 2:
            fit = fit_slope(rx, [math.log2(p) for p in populations])
            return WindowFit(fit.slope, (scales[0], scales[-1]), fit.residual, "saturated")
        if rx[0] <= 0:
            return WindowFit(0.0, (scales[0], scales[0]), 0.0, "saturated")
        return WindowFit(math.log2(populations[0]) / rx[0], (scales[0], scales[0]), 0.0, "saturated")
    lo, hi = run
    ys = []
    for c, p in zip(counts[lo:hi], populations[lo:hi]):
        y = occupancy_corrected(c, p) if desaturate else float(c)
        ys.append(math.log2(y))
    if hi - lo == 1:
        return WindowFit(ys[0] / xs[lo], (scales[lo], scales[lo]), 0.0, "single-scale")
    fit = fit_slope(xs[lo:hi], ys)
    return WindowFit(fit.slope, (scales[lo], scales[hi - 1]), fit.residual, "ok")


@dataclass(frozen=True)
class NaturalCover:
    """Generation j's active positions counted at resolution floor(delta j)."""

    delta: float
    scales: list[int]
    resolutions: list[int]
    counts: list[int]
    populations: list[int]

    @property
    def xs(self) -> list[float]:
        return [self.delta * j for j in self.scales]

    def rows(self) -> list[tuple[int, int, int]]:
        return list(zip(self.scales, self.resolutions, self.counts))

    def fit(self, desaturate: bool) -> WindowFit:
        return _window_fit(self.scales, self.xs, self.counts, self.populations, desaturate, self.resolutions)


def natural_cover(coeffs: LwsCoefficients, delta: float, j_lo: int) -> NaturalCover:
    scales, resolutions, counts, populations = [], [], [], []
    for j in range(max(j_lo, 0), coeffs.j_max + 1):
        r = math.floor(delta * j + 1e-9)
        scales.append(j)
        resolutions.append(r)
        counts.append(int(np.unique(coeffs.at(j) >> (j - r)).size))
        populations.append(build_cover(coeffs.spec, r).count)
    return NaturalCover(delta, scales, resolutions, counts, populations)


@dataclass(frozen=True)
class SpectrumLevel:
    h: float
    D_leq: float
    window: tuple[int, int] | None
    residual: float
    flag: str


@dataclass(frozen=True)
class SpectrumEstimate:
    h_grid: np.ndarray
    D_leq: np.ndarray
    method: SpectrumMethod
    gamma: float
    levels: list[SpectrumLevel]

    def rows(self) -> list[tuple[float, float, int | None, int | None, float]]:
        out = []
        for level, value in zip(self.levels, self.D_leq):
            lo, hi = level.window if level.window else (None, None)
            out.append((float(level.h), float(value), lo, hi, level.residual))
        return out

    def to_dict(self) -> dict[str, Any]:
        def finite(x: float) -> float | None:
            return float(x) if math.isfinite(x) else None

        return {
            "method": self.method,
            "gamma": self.gamma,
            "levels": [
                {"h": float(lv.h), "D_leq": finite(d), "window": list(lv.window) if lv.window else None,
                 "residual": finite(lv.residual), "flag": lv.flag}
                for lv, d in zip(self.levels, self.D_leq)
            ],
        }


def increasing_spectrum(
    source: LwsCoefficients | LeaderField | HolderField,
    h_grid: Sequence[float],
    gamma: float = 0.05,
    *,
    method: SpectrumMethod | None = None,
    j_min: int = 3,
    leaders: LeaderField | None = None,
    desaturate: bool = True,
) -> SpectrumEstimate:
    """Estimate h -> dim {x : h(x) <= h}.

    ``natural-cover`` (the default for coefficients) takes delta = alpha/(h + gamma)
    and counts generation j's active positions at resolution floor(delta j),
    where each of them lifts the leader to at least 2^{-(h + gamma) r}; the
    corrected counts are regressed against delta j. ``coarse-leader`` counts
    N_j(h) = #{k : d_{j,k} >= 2^{-(h + gamma) j}} over the scales whose
    thresholds the truncated leaders can still resolve, and saturates at
    shallow scales. ``level-set`` box-counts {h(x) <= h} from a HolderField.
    The result is forced nondecreasing and capped at 1.
    """
    grid = np.asarray(h_grid, dtype=np.float64)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise InvalidParameterError("h_grid must be nonempty and strictly increasing")
    if np.any(grid <= 0):
        raise InvalidParameterError("h_grid must be positive")

    coeffs = source if isinstance(source, LwsCoefficients) else None
    field_: LeaderField | None
    holder: HolderField | None = None
    if isinstance(source, HolderField):
        if method not in (None, "level-set"):
            raise InvalidParameterError(f"a HolderField only supports the level-set method, not {method!r}")
        method = "level-set"
        holder = source
        if leaders is None:
            raise InvalidParameterError("level-set spectrum needs the leader field for support counts")
        field_ = leaders
    else:
        if method is None:
            method = "natural-cover" if coeffs is not None else "coarse-leader"
        if method == "natural-cover":
            if coeffs is None:
                raise InvalidParameterError(
                    "the natural-cover spectrum needs the coefficients.\n"
                    "SOLUTION: Pass the LwsCoefficients instead of their LeaderField."
                )
            field_ = None
        else:
            field_ = compute_leaders(coeffs) if coeffs is not None else source
            if method == "level-set":
                holder = estimate_holder(field_, j_min)

    levels = []
    for h in grid:
        if method == "natural-cover":
            assert coeffs is not None
            delta = coeffs.alpha / (h + gamma)
            if delta > 1 + 1e-12:
                fit = WindowFit(NEG_INF, None, float("nan"), "empty")
            else:
                fit = natural_cover(coeffs, min(delta, 1.0), j_min).fit(desaturate)
        elif method == "coarse-leader":
            assert field_ is not None
            top = min(field_.j_max, math.floor(field_.alpha * field_.j_max / (h + gamma) + 1e-9))
            scales = list(range(j_min, top + 1))
            counts = [
                int(np.count_nonzero(field_.at(j) >= 2.0 ** (-(h + gamma) * j) * (1 - 1e-12)))
                for j in scales
            ]
            populations = [field_.halo[j] for j in scales]
            fit = _window_fit(scales, scales, counts, populations, desaturate)
        else:
            assert holder is not None and field_ is not None
            finest = np.flatnonzero(holder.h <= h + 1e-12)
            scales = list(range(holder.j_min, holder.j_max + 1))
            counts = [int(np.unique(finest >> (holder.j_max - j)).size) for j in scales]
            populations = [field_.support[j] for j in scales]
            fit = _window_fit(scales, scales, counts, populations, desaturate)
        if fit.flag == "saturated":
            logger.warning(f"spectrum level h={h:.3f}: every scale saturated, reporting support slope")
        levels.append(SpectrumLevel(float(h), fit.value, fit.window, fit.residual, fit.flag))

    raw = np.array([lv.D_leq for lv in levels], dtype=np.float64)
    D = np.minimum(np.maximum.accumulate(raw), 1.0)
    return SpectrumEstimate(h_grid=grid, D_leq=D, method=method, gamma=gamma, levels=levels)


def predicted_spectrum(h: float | np.ndarray, alpha: float, eta: float, H: float) -> np.ndarray:
    """(eta/alpha) h on [alpha, alpha H/eta], H beyond, -inf below alpha."""
    h = np.asarray(h, dtype=np.float64)
    linear = np.minimum(eta * h / alpha, H)
    return np.where(h < alpha, NEG_INF, linear)


def union_spectrum(h: float | np.ndarray, alpha: float, eta: float, dims: Sequence[float]) -> np.ndarray:
    """Supremum of the component spectra of a union with dimensions ``dims``.

    A component of dimension d inside a support of dimension H = max(dims)
    sees lacunarity eta - (H - d).
    """
    H = max(dims)
    h = np.asarray(h, dtype=np.float64)
    best = np.full(h.shape, NEG_INF)
    for d in dims:
        eta_n = eta - (H - d)
        if eta_n > 0:
            best = np.maximum(best, predicted_spectrum(h, alpha, eta_n, d))
    return best


@dataclass(frozen=True, eq=False)
class LimsupCoverEstimate:
    delta: float
    J1: int
    j_resolution: int
    marked: int
    tail_profile: list[tuple[int, int]]
    dim_hat: float
    window: tuple[int, int] | None
    residual: float
    flag: str
    cells: np.ndarray = field(repr=False)
    natural: list[tuple[int, int, int]] = field(repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "delta": self.delta,
            "J1": self.J1,
            "j_resolution": self.j_resolution,
            "marked": self.marked,
            "tail_profile": [list(p) for p in self.tail_profile],
            "dim_hat": self.dim_hat if math.isfinite(self.dim_hat) else None,
            "window": list(self.window) if self.window else None,
            "residual": self.residual if math.isfinite(self.residual) else None,
            "flag": self.flag,
            "natural_cover": [list(row) for row in self.natural],
        }


def limsup_cover(
    coeffs: LwsCoefficients,
    delta: float,
    J1: int,
    j_resolution: int | None = None,
    *,
    desaturate: bool = True,
) -> LimsupCoverEstimate:
    """Cover of the union of balls B(k 2^-j, 2^{-delta j}), k in A_j, j in [J1, j_max].

    Cells at ``j_resolution`` meeting an open ball are marked; the tail
    profile records the marked count for every tail start J1' >= J1.
    dim_hat is regressed from the natural covers, generation j counted at
    resolution floor(delta j) against delta j; each of those cells holds the
    centre of a marked ball.
    """
    if not 0 < delta <= 1:
        raise InvalidParameterError(f"delta must lie in (0, 1], got {delta}")
    if not 0 <= J1 < coeffs.j_max:
        raise InvalidParameterError(f"need 0 <= J1 < j_max={coeffs.j_max}, got {J1}")
    R = coeffs.j_max if j_resolution is None else j_resolution
    n = 1 << R

    marked = np.zeros(n, dtype=bool)
    profile: list[tuple[int, int]] = []
    for j in range(coeffs.j_max, J1 - 1, -1):
        members = coeffs.at(j)
        if members.size:
            centre = members.astype(np.float64) * 2.0 ** (R - j)
            radius = 2.0 ** (R - delta * j)
            lo = np.clip(np.floor(centre - radius), 0, n - 1).astype(np.int64)
            hi = np.clip(np.ceil(centre + radius) - 1, 0, n - 1).astype(np.int64)
            diff = np.bincount(lo, minlength=n + 1) - np.bincount(hi + 1, minlength=n + 1)
            marked |= np.cumsum(diff[:n]) > 0
        profile.append((j, int(np.count_nonzero(marked))))
    profile.reverse()

    cover = natural_cover(coeffs, delta, J1)
    fit = cover.fit(desaturate)
    marked.setflags(write=False)
    return LimsupCoverEstimate(
        delta=delta,
        J1=J1,
        j_resolution=R,
        marked=int(np.count_nonzero(marked)),
        tail_profile=profile,
        dim_hat=fit.value,
        window=fit.window,
        residual=fit.residual,
        flag=fit.flag,
        cells=marked,
        natural=cover.rows(),
    )


@dataclass(frozen=True, eq=False)
class BCRung:
    rung: int
    j: int
    resolvable: bool
    checked: int
    violations: np.ndarray = field(repr=False)

    @property
    def fraction(self) -> float:
        return self.violations.size / self.checked if self.checked else 0.0


@dataclass(frozen=True)
class BCReport:
    n: int
    beta_n: float
    ell: int
    rungs: list[BCRung]

    @property
    def fraction(self) -> float:
        """Violating fraction over the resolvable rungs."""
        checked = sum(r.checked for r in self.rungs if r.resolvable)
        bad = sum(r.violations.size for r in self.rungs if r.resolvable)
        return bad / checked if checked else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "beta_n": self.beta_n,
            "ell": self.ell,
            "fraction": self.fraction,
            "rungs": [
                {"rung": r.rung, "j": r.j, "resolvable": r.resolvable, "checked": r.checked,
                 "violations": [int(k) for k in r.violations], "fraction": r.fraction}
                for r in self.rungs
            ],
        }


def audit_prop_BC(
    coeffs: LwsCoefficients,
    qc: QuasiCantorLadder,
    n: int,
    *,
    eta: float | None = None,
    ell0: int | None = None,
    rtol: float = 1e-6,
) -> BCReport:
    """Check sup_{l' in l} |c_l'| >= 2^{-(alpha/eta)(H + 1/n) j} on every K interval.

    The ladder ratio b must satisfy (1 + b)^ell = (H + 1/n)/eta for an integer
    ell. A rung is resolvable when every scale the threshold can be met at has
    been synthesized.
    """
    if eta is None:
        if coeffs.params is None:
            raise InvalidParameterError("eta is required for coefficients built without LwsParams")
        eta = coeffs.params.eta
    H = qc.H
    beta = (H + 1 / n) / eta - 1
    if beta <= 0:
        raise InvalidParameterError(f"beta_n = {beta} must be positive")
    ell = round(math.log1p(beta) / math.log1p(qc.b))
    if ell < 1 or abs((1 + qc.b) ** ell - (1 + beta)) > rtol * (1 + beta):
        raise IncompatibleLadderError(
            f"ladder ratio b={qc.b} does not realize 1 + beta_n = {1 + beta} as an integer power.\n"
            f"SOLUTION: Build the ladder with b from select_ladder_ratio(H, eta, n)."
        )

    K = extract_K(qc, default_ell0(qc) if ell0 is None else ell0)
    rungs = []
    for i in range(K.ell0, qc.ladder.L + 1):
        j = qc.ladder.rungs[i]
        members = K.at(i)
        last = math.floor((H + 1 / n) * j / eta + 1e-9)
        resolvable = last <= coeffs.j_max
        found = np.zeros(members.size, dtype=bool)
        for level in range(j, min(last, coeffs.j_max) + 1):
            found |= np.isin(members, coeffs.at(level) >> (level - j))
        violations = members[~found] if resolvable else members[:0]
        rungs.append(BCRung(i, j, resolvable, int(members.size), violations))
    report = BCReport(n=n, beta_n=beta, ell=ell, rungs=rungs)
    logger.debug(f"coefficient sup audit n={n}: violating fraction {report.fraction:.4f}")
    return report
