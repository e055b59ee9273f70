"""Scenario files, the preset catalog and the plan runner.

A scenario is a YAML document (schema version 1):

    version: 1
    name: cantor-half
    spec: {kind: digits, m: 2, digits: [0, 3]}
    seed: 7
    plan:
      - op: dims
        params: {j_min: 2, j_max: 20, eps: 0.3}

Each plan step writes its artifacts as ``NN-<op>.*`` under the output
directory; ``manifest.json`` lists every artifact with its sha256 and is the
only file that carries timestamps.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .covers import (
    AffineIFS,
    AffineMap,
    DigitRestricted,
    FractalSpec,
    FullInterval,
    LevelCover,
    build_cover,
    conclusion_union,
    dump_spec,
    natural_step,
    theoretical_dimension,
)
from .dimension import audit_count_bounds, estimate_box_dim
from .duplication import DuplicationParams, audit_card_bounds, classify
from .errors import ScenarioError
from .formats import (
    DIMS_HEADER,
    DUPLICATION_HEADER,
    SPECTRUM_HEADER,
    cover_to_bytes,
    cover_to_rle,
    lws_to_csv,
    plot_data,
    sanitize,
    to_csv,
    to_json,
    tree_to_dict,
    write_bytes,
    write_text,
)
from .leaders import (
    audit_prop_BC,
    compute_leaders,
    estimate_holder,
    increasing_spectrum,
    limsup_cover,
    predicted_spectrum,
    union_spectrum,
)
from .lws import LwsCoefficients, LwsParams, rho_hat, synthesize
from .mdp import build_generations, certified_target, certify
from .quasicantor import QuasiCantorLadder, audit_theorem1, build_ladder, prune
from .rng import derive_seed

logger = logging.getLogger("dyadic")

MANIFEST = "manifest.json"


# --- step parameters ---

class _Params(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class CoverParams(_Params):
    j: int = Field(ge=0)


class DimsParams(_Params):
    j_min: int = Field(2, ge=0)
    j_max: int = Field(ge=1)
    step: int | None = Field(None, ge=1)
    H: float | None = None
    eps: float | None = Field(None, gt=0)


class ClassifyParams(_Params):
    j: int = Field(ge=1)
    beta: float = Field(gt=0)
    eps: float = Field(gt=0)
    H: float | None = None


class QuasicantorParams(_Params):
    J: int = Field(ge=1)
    b: float = Field(gt=0, lt=1)
    eps: float = Field(gt=0)
    H: float | None = None
    j_max: int | None = None
    ell0: int | None = None
    mode: Literal["previous", "fixed-point"] | None = None


class LwsStepParams(_Params):
    alpha: float = Field(gt=0)
    eta: float | None = Field(None, gt=0)
    H: float | None = None
    j_max: int = Field(ge=0)
    label: str = "lws"
    all_active: bool = False


class LeadersParams(_Params):
    j_min: int = Field(3, ge=2)
    bins: int = Field(50, ge=1)


class SpectrumParams(_Params):
    h_grid: list[float]
    gamma: float = Field(0.05, ge=0)
    method: Literal["natural-cover", "coarse-leader", "level-set"] = "natural-cover"
    j_min: int = Field(3, ge=2)
    check_h: list[float] = Field(default_factory=list)
    tolerance: float = Field(0.1, gt=0)
    union_dims: list[float] | None = None


class LimsupParams(_Params):
    deltas: list[float]
    J1: int = Field(ge=0)
    tolerance: float | None = Field(None, gt=0)


class BcAuditParams(_Params):
    n: int = Field(ge=1)
    max_fraction: float | None = Field(None, ge=0, le=1)


class MdpParams(_Params):
    s: float = Field(1.0, ge=1)
    b_n: float = Field(gt=0)
    max_generations: int = Field(3, ge=1)
    slack: float | None = Field(None, ge=0)


class PlanStep(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    op: Literal["cover", "dims", "classify", "quasicantor", "lws", "leaders",
                "spectrum", "limsup", "bc_audit", "mdp"]
    params: dict[str, Any] = Field(default_factory=dict)


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    version: Literal[1] = 1
    name: str
    description: str = ""
    spec: FractalSpec
    plan: list[PlanStep]
    seed: int = Field(0, ge=0)
    out_dir: str | None = None


def parse_scenario(text: str) -> Scenario:
    """Parse YAML text into a Scenario; errors carry line and column when known."""
    try:
        payload = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        if mark is not None:
            raise ScenarioError(f"scenario is not valid YAML: {getattr(e, 'problem', e)}",
                                line=mark.line + 1, column=mark.column + 1) from e
        raise ScenarioError(f"scenario is not valid YAML: {e}") from e
    if not isinstance(payload, dict):
        raise ScenarioError("scenario must be a mapping at the top level", line=1, column=1)
    root = yaml.compose(text, Loader=yaml.SafeLoader)
    try:
        scenario = Scenario.model_validate(payload)
    except ValidationError as e:
        raise ScenarioError(f"invalid scenario: {e}", **_error_position(root, e)) from e
    for index, step in enumerate(scenario.plan):
        _step_params(step, index, root=root)
    return scenario


def _error_position(root: yaml.Node | None, error: ValidationError,
                    prefix: tuple[Any, ...] = ()) -> dict[str, int]:
    """Line and column (1-based) of the node the first validation error points at."""
    if root is None or not error.errors():
        return {}
    first = error.errors()[0]
    loc = prefix + tuple(first["loc"])
    node = root
    for n, part in enumerate(loc):
        last = n == len(loc) - 1
        if isinstance(node, yaml.MappingNode):
            keys = {kv[0].value: kv for kv in node.value}
            pair = keys.get(str(part))
            if pair is None or (not last and str(loc[n + 1]) in keys):
                continue
            # unknown keys point at the key, bad values at the value
            node = pair[0] if last and first["type"] == "extra_forbidden" else pair[1]
        elif isinstance(node, yaml.SequenceNode):
            if isinstance(part, int) and 0 <= part < len(node.value):
                node = node.value[part]
        # union tags and missing fields leave the node where it is
    mark = node.start_mark
    return {"line": mark.line + 1, "column": mark.column + 1}


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from e
    return parse_scenario(text)


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.model_dump(mode="json"), sort_keys=False)


# --- runner ---

@dataclass
class StepOutcome:
    artifacts: list[Path] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)


@dataclass
class RunContext:
    scenario: Scenario
    seed: int
    out_dir: Path
    threads: int | None
    max_scale: int | None
    coeffs: LwsCoefficients | None = None
    qc: QuasiCantorLadder | None = None

    @property
    def spec(self) -> FractalSpec:
        return self.scenario.spec

    def H(self, given: float | None) -> float:
        if given is not None:
            return given
        H = theoretical_dimension(self.spec)
        if H is None:
            raise ScenarioError("H must be given for a spec without a theoretical dimension")
        return H

    def write(self, name: str, text: str) -> Path:
        return write_text(self.out_dir / name, text)

    def need_coeffs(self, op: str) -> LwsCoefficients:
        if self.coeffs is None:
            raise ScenarioError(f"step '{op}' needs an earlier 'lws' step")
        return self.coeffs

    def need_qc(self, op: str) -> QuasiCantorLadder:
        if self.qc is None:
            raise ScenarioError(f"step '{op}' needs an earlier 'quasicantor' step")
        return self.qc


def _cover_step(ctx: RunContext, p: CoverParams, stem: str) -> StepOutcome:
    cover = build_cover(ctx.spec, p.j, max_scale=ctx.max_scale, threads=ctx.threads)
    return StepOutcome(
        artifacts=[
            ctx.write(f"{stem}.rle", cover_to_rle(cover)),
            write_bytes(ctx.out_dir / f"{stem}.bits", cover_to_bytes(cover)),
        ],
        summary={"j": p.j, "count": cover.count, "exactness": cover.exactness},
    )


def _dims_step(ctx: RunContext, p: DimsParams, stem: str) -> StepOutcome:
    step = p.step or natural_step(ctx.spec)
    estimate = estimate_box_dim(ctx.spec, p.j_min, p.j_max, step=step, max_scale=ctx.max_scale)
    out = StepOutcome(summary=estimate.to_dict())
    if p.eps is not None:
        audit = audit_count_bounds(ctx.spec, ctx.H(p.H), p.eps, (p.j_min, p.j_max),
                                   step=step, max_scale=ctx.max_scale)
        rows = [(r.j, r.count, r.log2count, r.bound_low, r.bound_high, r.passed) for r in audit.rows]
        out.artifacts.append(ctx.write(f"{stem}.csv", to_csv(DIMS_HEADER, rows)))
        out.summary["audit"] = audit.to_dict()
        if not audit.all_passed:
            out.failures.append(f"count bounds fail at scales {audit.failures}")
    out.artifacts.append(ctx.write(f"{stem}.json", to_json(sanitize(out.summary))))
    return out


def _classify_step(ctx: RunContext, p: ClassifyParams, stem: str) -> StepOutcome:
    params = DuplicationParams(beta=p.beta, eps=p.eps, H=ctx.H(p.H))
    report = classify(ctx.spec, p.j, params, max_scale=ctx.max_scale, threads=ctx.threads)
    audit = audit_card_bounds(report, params)
    summary = {**report.summary(), "audit": audit.to_dict()}
    out = StepOutcome(
        artifacts=[
            ctx.write(f"{stem}.csv", to_csv(DUPLICATION_HEADER, report.rows())),
            ctx.write(f"{stem}.json", to_json(sanitize(summary))),
        ],
        summary=summary,
    )
    for check in (audit.nd, audit.fd, audit.sd):
        if not check.passed:
            out.failures.append(f"{check.name} cardinality bound fails (margin {check.margin:.4g})")
    return out


def _quasicantor_step(ctx: RunContext, p: QuasicantorParams, stem: str) -> StepOutcome:
    ladder = build_ladder(p.J, p.b, p.j_max if p.j_max is not None else ctx.max_scale)
    qc = prune(ctx.spec, ladder, ctx.H(p.H), p.eps, mode=p.mode,
               max_scale=ctx.max_scale, threads=ctx.threads)
    ctx.qc = qc
    audit = audit_theorem1(qc, p.ell0)
    summary = {"rungs": list(ladder.rungs), "ladder": qc.summary(), "audit": audit.to_dict()}
    out = StepOutcome(summary=summary)
    for i, j in enumerate(ladder.rungs):
        t_inf = LevelCover.from_indices(j, qc.T_inf[i])
        out.artifacts.append(ctx.write(f"{stem}-rung{i}.rle", cover_to_rle(t_inf)))
    out.artifacts.append(ctx.write(f"{stem}.json", to_json(sanitize(summary))))
    if audit.empty:
        out.failures.append("K is empty")
    elif not audit.count_passed:
        out.failures.append(f"K counts outside bounds (worst margin {audit.worst_count_margin:.4g})")
    if audit.flagged:
        out.failures.append(f"{len(audit.flagged)} reproduction checks fail")
    return out


def _lws_step(ctx: RunContext, p: LwsStepParams, stem: str) -> StepOutcome:
    if p.all_active:
        ctx.coeffs = LwsCoefficients.all_active(ctx.spec, p.alpha, p.j_max, max_scale=ctx.max_scale)
    else:
        if p.eta is None:
            raise ScenarioError("lws step needs eta unless all_active is set")
        params = LwsParams(alpha=p.alpha, eta=p.eta, H=ctx.H(p.H), j_max=p.j_max,
                           seed=derive_seed(ctx.seed, p.label))
        ctx.coeffs = synthesize(ctx.spec, params, max_scale=ctx.max_scale, threads=ctx.threads)
    summary: dict[str, Any] = {"total_active": ctx.coeffs.total, "counts": ctx.coeffs.counts()}
    try:
        summary["rho"] = rho_hat(ctx.coeffs).to_dict()
    except ArithmeticError as e:
        summary["rho"] = {"error": str(e)}
    return StepOutcome(
        artifacts=[
            ctx.write(f"{stem}.csv", lws_to_csv(ctx.coeffs)),
            ctx.write(f"{stem}.json", to_json(sanitize(summary))),
        ],
        summary=summary,
    )


def _leaders_step(ctx: RunContext, p: LeadersParams, stem: str) -> StepOutcome:
    holder = estimate_holder(compute_leaders(ctx.need_coeffs("leaders")), p.j_min)
    edges, counts = holder.histogram(p.bins)
    centres = (edges[:-1] + edges[1:]) / 2
    summary = {
        "j_min": holder.j_min,
        "j_max": holder.j_max,
        "h_min": float(holder.h.min()),
        "h_median": float(np.median(holder.h)),
        "vanishing_cells": int(np.count_nonzero(holder.vanishing)),
    }
    return StepOutcome(
        artifacts=[
            ctx.write(f"{stem}.dat", plot_data(centres, counts)),
            ctx.write(f"{stem}.json", to_json(summary)),
        ],
        summary=summary,
    )


def _spectrum_step(ctx: RunContext, p: SpectrumParams, stem: str) -> StepOutcome:
    coeffs = ctx.need_coeffs("spectrum")
    estimate = increasing_spectrum(coeffs, p.h_grid, p.gamma, method=p.method, j_min=p.j_min)
    out = StepOutcome(summary=estimate.to_dict())
    if p.union_dims:
        predicted = union_spectrum(estimate.h_grid, coeffs.alpha, _eta(coeffs), p.union_dims)
    else:
        H = coeffs.params.H if coeffs.params else ctx.H(None)
        predicted = predicted_spectrum(estimate.h_grid, coeffs.alpha, _eta(coeffs), H)
    out.summary["predicted"] = [float(v) if math.isfinite(v) else None for v in predicted]
    for h in p.check_h:
        pos = int(np.argmin(np.abs(estimate.h_grid - h)))
        gap = abs(float(estimate.D_leq[pos]) - float(predicted[pos]))
        if not gap <= p.tolerance:
            out.failures.append(f"spectrum at h={h} off by {gap:.4g} (> {p.tolerance})")
    out.artifacts += [
        ctx.write(f"{stem}.csv", to_csv(SPECTRUM_HEADER, estimate.rows())),
        ctx.write(f"{stem}.dat", plot_data(estimate.h_grid, estimate.D_leq)),
        ctx.write(f"{stem}.json", to_json(sanitize(out.summary))),
    ]
    return out


def _eta(coeffs: LwsCoefficients) -> float:
    if coeffs.params is None:
        raise ScenarioError("the spectrum prediction needs synthesized (not all-active) coefficients")
    return coeffs.params.eta


def _limsup_step(ctx: RunContext, p: LimsupParams, stem: str) -> StepOutcome:
    coeffs = ctx.need_coeffs("limsup")
    results = [limsup_cover(coeffs, d, p.J1) for d in p.deltas]
    out = StepOutcome(summary={"estimates": [r.to_dict() for r in results]})
    if p.tolerance is not None:
        eta = _eta(coeffs)
        for r in results:
            target = eta / r.delta
            if not abs(r.dim_hat - target) <= p.tolerance:
                out.failures.append(f"limsup dimension at delta={r.delta} is {r.dim_hat:.4g}, expected {target:.4g}")
    out.artifacts += [
        ctx.write(f"{stem}.dat", plot_data(p.deltas, [r.dim_hat for r in results])),
        ctx.write(f"{stem}.json", to_json(sanitize(out.summary))),
    ]
    return out


def _bc_audit_step(ctx: RunContext, p: BcAuditParams, stem: str) -> StepOutcome:
    report = audit_prop_BC(ctx.need_coeffs("bc_audit"), ctx.need_qc("bc_audit"), p.n)
    out = StepOutcome(summary=report.to_dict())
    if p.max_fraction is not None and report.fraction > p.max_fraction:
        out.failures.append(f"violating fraction {report.fraction:.4g} exceeds {p.max_fraction}")
    out.artifacts.append(ctx.write(f"{stem}.json", to_json(sanitize(out.summary))))
    return out


def _mdp_step(ctx: RunContext, p: MdpParams, stem: str) -> StepOutcome:
    qc = ctx.need_qc("mdp")
    tree = build_generations(qc, ctx.need_coeffs("mdp"), p.s, p.b_n, max_generations=p.max_generations)
    cert = certify(tree)
    target = certified_target(qc.H, p.b_n, p.s)
    summary = {"tree": tree.summary(), "certificate": cert.to_dict(), "target": target}
    out = StepOutcome(summary=summary)
    if not cert.self_check:
        out.failures.append("certificate re-scan failed")
    if p.slack is not None and cert.t_certified < target - p.slack:
        out.failures.append(f"certified t={cert.t_certified:.4g} below {target:.4g} - {p.slack}")
    out.artifacts += [
        ctx.write(f"{stem}-tree.json", to_json(tree_to_dict(tree))),
        ctx.write(f"{stem}.json", to_json(sanitize(summary))),
    ]
    return out


STEPS: dict[str, tuple[type[_Params], Callable[[RunContext, Any, str], StepOutcome]]] = {
    "cover": (CoverParams, _cover_step),
    "dims": (DimsParams, _dims_step),
    "classify": (ClassifyParams, _classify_step),
    "quasicantor": (QuasicantorParams, _quasicantor_step),
    "lws": (LwsStepParams, _lws_step),
    "leaders": (LeadersParams, _leaders_step),
    "spectrum": (SpectrumParams, _spectrum_step),
    "limsup": (LimsupParams, _limsup_step),
    "bc_audit": (BcAuditParams, _bc_audit_step),
    "mdp": (MdpParams, _mdp_step),
}


def _step_params(step: PlanStep, index: int, overrides: dict[str, Any] | None = None,
                 *, root: yaml.Node | None = None) -> _Params:
    model, _ = STEPS[step.op]
    values = dict(step.params)
    for key, value in (overrides or {}).items():
        if key in model.model_fields:
            values[key] = value
    try:
        return model.model_validate(values)
    except ValidationError as e:
        where = _error_position(root, e, prefix=("plan", index, "params"))
        raise ScenarioError(f"plan step {index} ({step.op}): {e}", **where) from e


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    artifacts: list[Path]
    failures: list[str]
    error: str | None = None

    @property
    def manifest(self) -> Path:
        return self.out_dir / MANIFEST


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_scenario(
    scenario: Scenario | str | Path,
    seed: int | None = None,
    overrides: dict[str, Any] | None = None,
    *,
    out_dir: str | Path | None = None,
    threads: int | None = None,
    max_scale: int | None = None,
) -> RunResult:
    """Execute every plan step and write the manifest.

    Exit codes: 0 success, 2 some audit failed, 1 error.
    """
    try:
        if not isinstance(scenario, Scenario):
            scenario = load_scenario(scenario)
    except ScenarioError as e:
        logger.error(f"{e}")
        return RunResult(1, Path(out_dir or "."), [], [], error=str(e))

    seed = scenario.seed if seed is None else seed
    target = Path(out_dir or scenario.out_dir or f"runs/{scenario.name}")
    target.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(scenario=scenario, seed=seed, out_dir=target,
                     threads=threads, max_scale=max_scale)

    started = _now()
    artifacts: list[Path] = []
    failures: list[str] = []
    steps: list[dict[str, Any]] = []
    error = None
    for index, step in enumerate(scenario.plan):
        stem = f"{index:02d}-{step.op}"
        began = time.perf_counter()
        try:
            params = _step_params(step, index, overrides)
            outcome = STEPS[step.op][1](ctx, params, stem)
        except Exception as e:
            logger.error(f"step {stem} failed: {e}")
            error = f"{stem}: {e}"
            steps.append({"step": stem, "status": "error", "error": str(e),
                          "wall_time": time.perf_counter() - began})
            break
        artifacts += outcome.artifacts
        failures += [f"{stem}: {msg}" for msg in outcome.failures]
        for msg in outcome.failures:
            logger.warning(f"audit failure in {stem}: {msg}")
        steps.append({"step": stem, "status": "failed" if outcome.failures else "ok",
                      "failures": outcome.failures, "wall_time": time.perf_counter() - began})
        logger.info(f"{stem} done in {steps[-1]['wall_time']:.2f}s")

    exit_code = 1 if error else (2 if failures else 0)
    manifest = {
        "schema_version": 1,
        "scenario": scenario.model_dump(mode="json"),
        "seed": seed,
        "overrides": overrides or {},
        "versions": _versions(),
        "started_at": started,
        "finished_at": _now(),
        "steps": steps,
        "exit_code": exit_code,
        "artifacts": [
            {"path": p.relative_to(target).as_posix(), "sha256": sha256_file(p), "bytes": p.stat().st_size}
            for p in artifacts
        ],
    }
    write_text(target / MANIFEST, to_json(sanitize(manifest)))
    return RunResult(exit_code, target, artifacts, failures, error)


def _versions() -> dict[str, str]:
    import scipy

    return {"dyadic-fractal": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def verify_manifest(run_dir: str | Path) -> tuple[list[dict[str, Any]], list[str]]:
    """Recompute artifact hashes; returns the manifest entries and the mismatches."""
    run_dir = Path(run_dir)
    path = run_dir / MANIFEST
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ScenarioError(f"cannot read {path}: {e}") from e
    entries = manifest.get("artifacts", [])
    mismatches = []
    for entry in entries:
        file = run_dir / entry["path"]
        if not file.exists():
            mismatches.append(f"{entry['path']}: missing")
        elif sha256_file(file) != entry["sha256"]:
            mismatches.append(f"{entry['path']}: hash mismatch")
    return entries, mismatches


# --- presets ---

@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    build: Callable[[], Scenario]


def _scenario(name: str, description: str, spec: FractalSpec, plan: list[tuple[str, dict[str, Any]]],
              seed: int = 2024) -> Scenario:
    return Scenario(
        name=name,
        description=description,
        spec=spec,
        plan=[PlanStep(op=op, params=params) for op, params in plan],
        seed=seed,
    )


_CANTOR_HALF = DigitRestricted(m=2, digits=(0, 3))

DEFAULT_PRESETS: dict[str, Preset] = {
    p.name: p
    for p in [
        Preset(
            "jaffard-unit",
            "LWS on [0,1], alpha=1, eta=0.5: increasing spectrum against (eta/alpha) h",
            lambda: _scenario("jaffard-unit", "LWS spectrum on the unit interval", FullInterval(), [
                ("lws", {"alpha": 1.0, "eta": 0.5, "j_max": 18}),
                ("spectrum", {"h_grid": [1.0, 1.2, 1.4, 1.6, 1.8], "check_h": [1.0, 1.2, 1.4, 1.6, 1.8],
                              "tolerance": 0.1}),
                ("limsup", {"deltas": [0.6, 0.75, 0.9], "J1": 8}),
            ]),
        ),
        Preset(
            "cantor-half",
            "Digit set {0,3} in base 4: covers, dimension 1/2 and duplication audit",
            lambda: _scenario("cantor-half", "Dimension-1/2 Cantor set", _CANTOR_HALF, [
                ("cover", {"j": 8}),
                ("dims", {"j_min": 2, "j_max": 20, "eps": 0.3}),
                ("classify", {"j": 10, "beta": 1.0, "eps": 0.1}),
            ]),
        ),
        Preset(
            "union-kn",
            "Disjoint components of dimension 1-1/n, n=2,3,4: quasi-Cantor selection and spectrum",
            lambda: _scenario("union-kn", "Union of Cantor sets of dimensions 1/2, 2/3, 3/4",
                              conclusion_union((2, 3, 4)), [
                ("dims", {"j_min": 12, "j_max": 24}),
                ("quasicantor", {"J": 8, "b": 0.5, "eps": 0.02, "j_max": 24}),
                ("lws", {"alpha": 1.0, "eta": 0.5, "j_max": 18}),
                ("spectrum", {"h_grid": [1.0, 1.2, 1.4, 1.6, 1.8],
                              "union_dims": [0.5, 2 / 3, 0.75]}),
            ]),
        ),
        Preset(
            "ifs-overlap-outer",
            "Overlapping IFS x/3, (x+1)/3, (x+3/5)/3: outer covers and box dimension",
            lambda: _scenario("ifs-overlap-outer", "Outer covers of an overlapping IFS", AffineIFS(maps=(
                AffineMap(r="1/3", t=0), AffineMap(r="1/3", t="1/3"), AffineMap(r="1/3", t="1/5"),
            )), [
                ("cover", {"j": 12}),
                ("dims", {"j_min": 4, "j_max": 16}),
            ]),
        ),
        Preset(
            "quasicantor-audit",
            "Quasi-Cantor pruning on the dimension-1/2 Cantor set, J=8, b=0.5, eps=0.04",
            lambda: _scenario("quasicantor-audit", "Pruning and audit", _CANTOR_HALF, [
                ("quasicantor", {"J": 8, "b": 0.5, "eps": 0.04, "j_max": 24}),
            ]),
        ),
        Preset(
            "mdp-certify",
            "Ball generations on [0,1] with every coefficient active; certified dimension bound",
            lambda: _scenario("mdp-certify", "Mass distribution certificate", FullInterval(), [
                ("quasicantor", {"J": 6, "b": 0.5, "eps": 0.05, "j_max": 20}),
                ("lws", {"alpha": 1.0, "j_max": 20, "all_active": True}),
                ("mdp", {"s": 1.0, "b_n": 0.05, "slack": 0.05}),
            ]),
        ),
    ]
}


def list_presets(registry: dict[str, Preset] | None = None) -> list[tuple[str, str]]:
    registry = DEFAULT_PRESETS if registry is None else registry
    return [(name, registry[name].description) for name in sorted(registry)]


def get_preset(name: str, registry: dict[str, Preset] | None = None) -> Scenario:
    registry = DEFAULT_PRESETS if registry is None else registry
    if name not in registry:
        available = ", ".join(sorted(registry)) or "(none)"
        raise ScenarioError(f"unknown preset '{name}'; available: {available}")
    return registry[name].build()


def spec_summary(spec: FractalSpec) -> dict[str, Any]:
    return {"spec": dump_spec(spec), "theoretical_dimension": theoretical_dimension(spec)}
