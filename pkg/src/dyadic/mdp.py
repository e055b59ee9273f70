"""Nested ball generations with uniformly split mass, and dimension certificates.

Generation N lives on rung p_N of a quasi-Cantor ladder. Its balls are
centred at active coefficient positions one rung deeper whose cells meet K,
and have radius 2^{-r_N}, r_N = ceil(s j_{p_N}). Inside every ball of
generation N-1 roughly 2^{x (H - 6 b_n)} disjoint balls are kept, x being
the scale gap, and the parent's mass is split evenly among them.

A ball is stored as the integer interval [lo, hi) on the grid 2^-g.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable

import numpy as np

from .covers import FractalSpec, build_cover
from .errors import ConstructionError, InvalidParameterError
from .lws import LwsCoefficients
from .quasicantor import QuasiCantorLadder, default_ell0, extract_K

logger = logging.getLogger("dyadic")


@dataclass(frozen=True, eq=False)
class Generation:
    index: int
    rung: int | None
    size_exponent: int
    grid: int
    lo: np.ndarray = field(repr=False)
    hi: np.ndarray = field(repr=False)
    parent: np.ndarray = field(repr=False)
    denominators: np.ndarray = field(repr=False)
    target: int = 1
    floor_target: int = 1
    packed_min: int = 0

    def __len__(self) -> int:
        return int(self.lo.size)

    @property
    def masses(self) -> np.ndarray:
        return 1.0 / self.denominators.astype(np.float64)

    def mass_total(self) -> Fraction:
        values, counts = np.unique(self.denominators, return_counts=True)
        return sum((Fraction(int(c), int(v)) for v, c in zip(values, counts)), Fraction(0))

    def on_grid(self, g: int) -> tuple[np.ndarray, np.ndarray]:
        if g < self.grid:
            raise InvalidParameterError(f"cannot express grid {self.grid} balls on coarser grid {g}")
        shift = g - self.grid
        return self.lo << shift, self.hi << shift


@dataclass(frozen=True, eq=False)
class GenerationTree:
    generations: list[Generation]
    c: float = 2.0
    schedule: tuple[int, ...] = ()
    shallow: bool = False
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def deepest(self) -> Generation:
        return self.generations[-1]

    def summary(self) -> dict[str, Any]:
        return {
            "generations": [
                {"index": g.index, "rung": g.rung, "size_exponent": g.size_exponent,
                 "grid": g.grid, "balls": len(g), "target": g.target,
                 "floor_target": g.floor_target, "packed_min": g.packed_min}
                for g in self.generations
            ],
            "schedule": list(self.schedule),
            "shallow": self.shallow,
            "c": self.c,
            "params": self.params,
        }


def certified_target(H: float, b_n: float, s: float) -> float:
    """(H - 7 b_n) / (s (1 + b_n))."""
    return (H - 7 * b_n) / (s * (1 + b_n))


def uniform_tree(spec: FractalSpec, depth: int, step: int = 1, *,
                 max_scale: int | None = None) -> GenerationTree:
    """Uniform splitting on the exact covers at scales step, 2 step, ..., depth."""
    if depth < 1 or step < 1:
        raise InvalidParameterError(f"need depth >= 1 and step >= 1, got {depth}, {step}")
    generations: list[Generation] = []
    prev_idx = np.zeros(1, dtype=np.int64)
    prev_den = np.ones(1, dtype=np.int64)
    prev_j = 0
    for index, j in enumerate(range(step, depth + 1, step), start=1):
        idx = build_cover(spec, j, max_scale=max_scale).indices
        parent = np.searchsorted(prev_idx, idx >> (j - prev_j))
        fanout = np.bincount(parent, minlength=prev_idx.size)
        den = prev_den[parent] * fanout[parent]
        generations.append(Generation(
            index=index, rung=None, size_exponent=j, grid=j,
            lo=idx, hi=idx + 1, parent=parent, denominators=den,
            target=int(fanout.max()), floor_target=int(fanout.min()), packed_min=int(fanout.min()),
        ))
        prev_idx, prev_den, prev_j = idx, den, j
    return GenerationTree(generations=generations, c=1.0, params={"uniform": True, "step": step})


def plan_schedule(
    rungs: tuple[int, ...],
    ell0: int,
    s: float,
    b_n: float,
    H: float,
    max_generations: int = 3,
) -> tuple[tuple[int, ...], bool]:
    """Generation rungs p_1 < p_2 < ... and whether the schedule is shallow.

    p_N is the smallest rung with j_{p_{N-1}} (s - 1)(H - 6 b_n) < j_{p_N} b_n 2^-N.
    Every generation rung needs one deeper rung for its candidates.
    """
    L = len(rungs) - 1
    if ell0 + 1 > L:
        raise InvalidParameterError(f"no rung after ell0={ell0} on a ladder with L={L}")
    schedule = [ell0]
    for N in range(2, max_generations + 1):
        left = rungs[schedule[-1]] * (s - 1) * (H - 6 * b_n)
        nxt = next(
            (p for p in range(schedule[-1] + 1, L)
             if left < rungs[p] * b_n * 2.0 ** -N),
            None,
        )
        if nxt is None:
            break
        schedule.append(nxt)
    shallow = False
    if len(schedule) < 2:
        shallow = True
        if ell0 + 2 <= L:
            schedule.append(ell0 + 1)
        logger.warning(
            f"schedule condition unsatisfiable below scale {rungs[-1]}; "
            f"running a shallow schedule {schedule}"
        )
    return tuple(schedule), shallow


def _pack(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Leftmost-first disjoint packing; positions into the sorted inputs."""
    chosen = []
    edge = None
    for pos in range(lo.size):
        if edge is None or lo[pos] >= edge:
            chosen.append(pos)
            edge = hi[pos]
    return np.asarray(chosen, dtype=np.int64)


def build_generations(
    qc: QuasiCantorLadder,
    coeffs: LwsCoefficients,
    s: float,
    b_n: float,
    *,
    ell0: int | None = None,
    max_generations: int = 3,
) -> GenerationTree:
    """Select nested disjoint balls generation by generation.

    Raises:
        ConstructionError: a parent ball holds fewer disjoint candidates than
            floor(2^{x (H - 6 b_n)}).
    """
    if s < 1:
        raise InvalidParameterError(f"contraction s must be >= 1, got {s}")
    if b_n <= 0:
        raise InvalidParameterError(f"b_n must be positive, got {b_n}")
    H = qc.H
    rungs = qc.ladder.rungs
    ell0 = default_ell0(qc) if ell0 is None else ell0
    K = extract_K(qc, ell0)
    schedule, shallow = plan_schedule(rungs, ell0, s, b_n, H, max_generations)

    generations: list[Generation] = []
    for N, p in enumerate(schedule, start=1):
        j_p, j_c = rungs[p], rungs[p + 1]
        r = math.ceil(s * j_p - 1e-9)
        g = max(r, j_c)
        x = j_p if N == 1 else j_p - s * rungs[schedule[N - 2]]
        size = 2.0 ** (x * (H - 6 * b_n))
        target = max(1, math.ceil(size - 1e-9))
        need = max(1, math.floor(size + 1e-9))

        centres = np.intersect1d(coeffs.at(j_c), K.at(p + 1))
        radius = 1 << (g - r)
        c_lo = (centres << (g - j_c)) - radius
        c_hi = (centres << (g - j_c)) + radius
        cells = centres >> (j_c - j_p)

        if N == 1:
            p_lo = np.zeros(1, dtype=np.int64)
            p_hi = np.full(1, 1 << g, dtype=np.int64)
            p_den = np.ones(1, dtype=np.int64)
        else:
            prev = generations[-1]
            p_lo, p_hi = prev.on_grid(g)
            p_den = prev.denominators

        lo_parts, hi_parts, par_parts, den_parts = [], [], [], []
        packed_min = None
        for q in range(p_lo.size):
            a = np.searchsorted(c_lo, p_lo[q], side="left")
            z = np.searchsorted(c_hi, p_hi[q], side="right")
            if z <= a:
                inside = np.zeros(0, dtype=np.int64)
            else:
                inside = np.arange(a, z)
            _, first = np.unique(cells[inside], return_index=True)
            inside = inside[np.sort(first)]
            packed = inside[_pack(c_lo[inside], c_hi[inside])]
            packed_min = packed.size if packed_min is None else min(packed_min, packed.size)
            if packed.size < need:
                raise ConstructionError(N, q, need, int(packed.size))
            if packed.size > target:
                packed = packed[(np.arange(target) * packed.size) // target]
            lo_parts.append(c_lo[packed])
            hi_parts.append(c_hi[packed])
            par_parts.append(np.full(packed.size, q, dtype=np.int64))
            den_parts.append(np.full(packed.size, p_den[q] * packed.size, dtype=np.int64))

        generations.append(Generation(
            index=N, rung=p, size_exponent=r, grid=g,
            lo=np.concatenate(lo_parts), hi=np.concatenate(hi_parts),
            parent=np.concatenate(par_parts), denominators=np.concatenate(den_parts),
            target=target, floor_target=need, packed_min=int(packed_min or 0),
        ))
        logger.debug(f"generation {N} on rung {p}: {len(generations[-1])} balls, target {target}/parent")

    return GenerationTree(
        generations=generations,
        c=2.0,
        schedule=schedule,
        shallow=shallow,
        params={"s": s, "b_n": b_n, "H": H, "ell0": ell0, "max_generations": max_generations},
    )


@dataclass(frozen=True)
class MdpCertificate:
    t_certified: float
    c: float
    depth: int
    worst_interval: tuple[int, int]
    profile: list[tuple[int, float]]
    self_check: bool
    shallow: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "t_certified": self.t_certified,
            "c": self.c,
            "depth": self.depth,
            "worst_interval": {"j": self.worst_interval[0], "k": self.worst_interval[1]},
            "profile": [{"j": j, "t": t} for j, t in self.profile],
            "self_check": self.self_check,
            "shallow": self.shallow,
        }


def _interval_masses(gen: Generation, tau: int) -> tuple[np.ndarray, np.ndarray]:
    """Dyadic cells at scale tau meeting some ball, with the masses of those balls."""
    shift = gen.grid - tau
    first = gen.lo >> shift
    last = (gen.hi - 1) >> shift
    span = last - first
    masses = gen.masses
    keys, weights = [], []
    for offset in range(int(span.max()) + 1):
        hit = span >= offset
        keys.append(first[hit] + offset)
        weights.append(masses[hit])
    cells, inverse = np.unique(np.concatenate(keys), return_inverse=True)
    return cells, np.bincount(inverse, weights=np.concatenate(weights))


def _rescan(gen: Generation, tau: int, t: float, c: float) -> bool:
    """Dense re-computation of mu at scale tau against c 2^{-tau t}."""
    n = 1 << tau
    shift = gen.grid - tau
    first = np.clip(gen.lo >> shift, 0, n - 1)
    last = np.clip((gen.hi - 1) >> shift, 0, n - 1)
    masses = gen.masses
    diff = np.bincount(first, weights=masses, minlength=n + 1)
    diff -= np.bincount(last + 1, weights=masses, minlength=n + 1)
    dense = np.cumsum(diff[:n])
    bound = c * 2.0 ** (-tau * t)
    return bool(np.all(dense <= bound * (1 + 1e-9) + 1e-15))


def certify(tree: GenerationTree, depth: int | None = None, c: float | None = None) -> MdpCertificate:
    """Largest t with mu(D) <= c |D|^t for every dyadic D of scale 1..depth.

    mu(D) sums the masses of deepest-generation balls meeting D, so balls
    straddling D count in full.
    """
    gen = tree.deepest
    c = tree.c if c is None else c
    depth = gen.size_exponent if depth is None else depth
    if len(gen) == 0 or float(gen.masses.sum()) <= 0:
        raise InvalidParameterError("generation tree carries no mass")
    if not 1 <= depth <= gen.grid:
        raise InvalidParameterError(f"depth must lie in 1..{gen.grid}, got {depth}")

    log_c = math.log2(c)
    profile: list[tuple[int, float]] = []
    best = (float("inf"), 0, 0)
    for tau in range(1, depth + 1):
        cells, mu = _interval_masses(gen, tau)
        exps = (log_c - np.log2(mu)) / tau
        pos = int(np.argmin(exps))
        profile.append((tau, float(exps[pos])))
        if exps[pos] < best[0]:
            best = (float(exps[pos]), tau, int(cells[pos]))
    t = best[0]
    check = all(_rescan(gen, tau, t, c) for tau in range(1, depth + 1))
    if not check:
        logger.error(f"certificate re-scan found a violation at t={t:.6f}")
    return MdpCertificate(
        t_certified=t,
        c=c,
        depth=depth,
        worst_interval=(best[1], best[2]),
        profile=profile,
        self_check=check,
        shallow=tree.shallow,
    )


def feasibility(
    qc: QuasiCantorLadder,
    coeff_sets: Iterable[LwsCoefficients],
    s: float,
    b_n: float,
    **kwargs: Any,
) -> dict[str, Any]:
    """Build a tree for each coefficient set; report the shortfall rate."""
    built, shortfalls = [], []
    for n, coeffs in enumerate(coeff_sets):
        try:
            tree = build_generations(qc, coeffs, s, b_n, **kwargs)
            built.append(certify(tree).t_certified)
        except ConstructionError as e:
            shortfalls.append({"run": n, "generation": e.generation, "parent": e.parent,
                               "target": e.target, "found": e.found})
    runs = len(built) + len(shortfalls)
    return {
        "runs": runs,
        "built": len(built),
        "shortfall_rate": len(shortfalls) / runs if runs else 0.0,
        "t_certified": built,
        "shortfalls": shortfalls,
    }
