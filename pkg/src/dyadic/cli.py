"""Click CLI entrypoint: one subcommand per analysis plus the scenario runner.

Exit codes: 0 success, 2 an audit failed, 1 any error.
"""
from __future__ import annotations

import functools
import sys
from pathlib import Path
from typing import Any, Callable

import click
import numpy as np
import yaml

from . import __version__
from .config import configure_logging
from .covers import LevelCover, build_cover, natural_step, parse_spec, theoretical_dimension
from .dimension import audit_count_bounds, estimate_box_dim
from .duplication import DuplicationParams, audit_card_bounds, classify
from .errors import ScenarioError
from .formats import (
    DIMS_HEADER,
    DUPLICATION_HEADER,
    SPECTRUM_HEADER,
    cover_to_rle,
    lws_to_csv,
    plot_data,
    sanitize,
    to_csv,
    to_json,
    tree_to_dict,
    write_text,
)
from .leaders import compute_leaders, estimate_holder, increasing_spectrum, limsup_cover, predicted_spectrum
from .lws import LwsCoefficients, LwsParams, rho_hat, synthesize
from .mdp import build_generations, certified_target, certify
from .quasicantor import audit_theorem1, build_ladder, prune
from .rng import derive_seed
from .scenarios import get_preset, list_presets, load_scenario, run_scenario, verify_manifest

EXIT_OK, EXIT_ERROR, EXIT_AUDIT = 0, 1, 2


def _fail_on_error(fn: Callable[..., None]) -> Callable[..., None]:
    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            fn(*args, **kwargs)
        except click.exceptions.Exit:
            raise
        except Exception as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_ERROR)

    return wrapper


def _spec_option(fn: Callable[..., None]) -> Callable[..., None]:
    return click.option(
        "--spec",
        "spec_text",
        default='{"kind": "full"}',
        show_default=True,
        help='Fractal spec as inline YAML/JSON, or @path to a file',
    )(fn)


def common_options(fn: Callable[..., None]) -> Callable[..., None]:
    """--seed, --threads, --out-dir, --format shared by the analysis commands."""
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="json",
                      show_default=True, help="Output format")(fn)
    fn = click.option("--out-dir", default=None, type=click.Path(file_okay=False),
                      help="Write the artifact here instead of stdout")(fn)
    fn = click.option("--threads", default=None, type=click.IntRange(1), help="Worker cap")(fn)
    fn = click.option("--seed", default=0, show_default=True, type=click.IntRange(0), help="Top-level seed")(fn)
    return _spec_option(fn)


def _load_spec(spec_text: str):
    text = Path(spec_text[1:]).read_text(encoding="utf-8") if spec_text.startswith("@") else spec_text
    return parse_spec(yaml.safe_load(text))


def _H(spec, H: float | None) -> float:
    if H is not None:
        return H
    value = theoretical_dimension(spec)
    if value is None:
        raise click.UsageError("--H is required for this spec")
    return value


def _emit(out_dir: str | None, name: str, text: str) -> None:
    if out_dir is None:
        click.echo(text, nl=False)
    else:
        path = write_text(Path(out_dir) / name, text)
        click.echo(f"wrote {path}", err=True)


def _finish(failures: list[str]) -> None:
    for msg in failures:
        click.echo(f"AUDIT FAILED: {msg}", err=True)
    sys.exit(EXIT_AUDIT if failures else EXIT_OK)


def _coefficients(spec, alpha: float, eta: float, H: float | None, j_max: int, seed: int,
                  threads: int | None) -> LwsCoefficients:
    params = LwsParams(alpha=alpha, eta=eta, H=_H(spec, H), j_max=j_max, seed=derive_seed(seed, "lws"))
    return synthesize(spec, params, threads=threads)


@click.group()
@click.version_option(__version__, prog_name="dyadic")
@click.option("--log-level", default=None, help="Override DYADIC_LOG_LEVEL")
def cli(log_level: str | None) -> None:
    """Dyadic fractal supports, lacunary wavelet series and multifractal audits."""
    configure_logging(log_level)


@cli.command("cover")
@common_options
@click.option("--j", "j", required=True, type=click.IntRange(0), help="Dyadic scale")
@click.option("--j-max", default=None, type=click.IntRange(0), help="Maximum materialized scale")
@_fail_on_error
def cover_command(spec_text, seed, threads, out_dir, fmt, j, j_max) -> None:
    """Dump the level cover I_j (run-length text, or a JSON summary)."""
    cover = build_cover(_load_spec(spec_text), j, max_scale=j_max, threads=threads)
    if fmt == "json":
        payload = {"j": j, "count": cover.count, "exactness": cover.exactness,
                   "indices": cover.indices.tolist()}
        _emit(out_dir, f"cover-{j}.json", to_json(payload))
    else:
        _emit(out_dir, f"cover-{j}.rle", cover_to_rle(cover))


@cli.command("dims")
@common_options
@click.option("--j-min", default=2, show_default=True, type=click.IntRange(0))
@click.option("--j-max", required=True, type=click.IntRange(1))
@click.option("--step", default=None, type=click.IntRange(1), help="Regression stride (default: natural step)")
@click.option("--H", "H", default=None, type=float, help="Dimension for the count audit")
@click.option("--eps", default=None, type=click.FloatRange(min=0, min_open=True), help="Audit the count bounds")
@_fail_on_error
def dims_command(spec_text, seed, threads, out_dir, fmt, j_min, j_max, step, H, eps) -> None:
    """Box-dimension estimate and, with --eps, the 2^{j(H -/+ eps)} count audit."""
    spec = _load_spec(spec_text)
    step = step or natural_step(spec)
    estimate = estimate_box_dim(spec, j_min, j_max, step=step)
    payload = estimate.to_dict()
    failures: list[str] = []
    rows = [(j, c, float(np.log2(c)) if c else float("-inf"), "", "", "") for j, c in estimate.per_level_counts]
    if eps is not None:
        audit = audit_count_bounds(spec, _H(spec, H), eps, (j_min, j_max), step=step)
        payload["audit"] = audit.to_dict()
        rows = [(r.j, r.count, r.log2count, r.bound_low, r.bound_high, r.passed) for r in audit.rows]
        if not audit.all_passed:
            failures.append(f"count bounds fail at scales {audit.failures}")
    if fmt == "csv":
        _emit(out_dir, "dims.csv", to_csv(DIMS_HEADER, rows, [f"H_hat={estimate.H_hat!r}"]))
    else:
        _emit(out_dir, "dims.json", to_json(sanitize(payload)))
    _finish(failures)


@cli.command("classify")
@common_options
@click.option("--j", "j", required=True, type=click.IntRange(1))
@click.option("--beta", required=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--eps", required=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--H", "H", default=None, type=float)
@click.option("--j-max", default=None, type=click.IntRange(1), help="Maximum materialized scale")
@_fail_on_error
def classify_command(spec_text, seed, threads, out_dir, fmt, j, beta, eps, H, j_max) -> None:
    """Slow/normal/fast duplication classes at scale j, with the cardinality audit."""
    spec = _load_spec(spec_text)
    params = DuplicationParams(beta=beta, eps=eps, H=_H(spec, H))
    report = classify(spec, j, params, max_scale=j_max, threads=threads)
    audit = audit_card_bounds(report, params)
    if fmt == "csv":
        _emit(out_dir, f"classify-{j}.csv", to_csv(DUPLICATION_HEADER, report.rows()))
    else:
        _emit(out_dir, f"classify-{j}.json", to_json(sanitize({**report.summary(), "audit": audit.to_dict()})))
    _finish([f"{c.name} bound fails (margin {c.margin:.4g})" for c in (audit.nd, audit.fd, audit.sd) if not c.passed])


@cli.command("quasicantor")
@common_options
@click.option("--J", "J", required=True, type=click.IntRange(1), help="First rung")
@click.option("--b", "b", required=True, type=click.FloatRange(0, 1, min_open=True, max_open=True))
@click.option("--eps", required=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--H", "H", default=None, type=float)
@click.option("--j-max", default=None, type=click.IntRange(1), help="Deepest rung allowed")
@click.option("--ell0", default=None, type=click.IntRange(0))
@click.option("--mode", default=None, type=click.Choice(["previous", "fixed-point"]))
@_fail_on_error
def quasicantor_command(spec_text, seed, threads, out_dir, fmt, J, b, eps, H, j_max, ell0, mode) -> None:
    """Prune the covers along the rung ladder and audit the resulting quasi-Cantor set."""
    spec = _load_spec(spec_text)
    ladder = build_ladder(J, b, j_max)
    qc = prune(spec, ladder, _H(spec, H), eps, mode=mode, max_scale=j_max, threads=threads)
    audit = audit_theorem1(qc, ell0)
    if fmt == "csv":
        rows = [(r["rung"], r["j"], r["cover"], r["T_inf"], r["stabilized_at"]) for r in qc.summary()]
        _emit(out_dir, "quasicantor.csv", to_csv(("rung", "j", "cover", "T_inf", "stabilized_at"), rows))
        if out_dir is not None:
            for i, j in enumerate(ladder.rungs):
                write_text(Path(out_dir) / f"quasicantor-rung{i}.rle",
                           cover_to_rle(LevelCover.from_indices(j, qc.T_inf[i])))
    else:
        _emit(out_dir, "quasicantor.json", to_json(sanitize({"ladder": qc.summary(), "audit": audit.to_dict()})))
    failures = []
    if audit.empty:
        failures.append("K is empty")
    elif not audit.count_passed:
        failures.append(f"K counts outside bounds (worst margin {audit.worst_count_margin:.4g})")
    if audit.flagged:
        failures.append(f"{len(audit.flagged)} reproduction checks fail")
    _finish(failures)


@cli.command("lws")
@common_options
@click.option("--alpha", default=1.0, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--eta", required=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--H", "H", default=None, type=float)
@click.option("--j-max", required=True, type=click.IntRange(0))
@_fail_on_error
def lws_command(spec_text, seed, threads, out_dir, fmt, alpha, eta, H, j_max) -> None:
    """Synthesize a lacunary wavelet series (CSV of active positions, or JSON counts and slope)."""
    spec = _load_spec(spec_text)
    coeffs = _coefficients(spec, alpha, eta, H, j_max, seed, threads)
    if fmt == "csv":
        _emit(out_dir, "lws.csv", lws_to_csv(coeffs))
    else:
        _emit(out_dir, "lws.json", to_json(sanitize({"total_active": coeffs.total, **rho_hat(coeffs).to_dict()})))


@cli.command("leaders")
@common_options
@click.option("--alpha", default=1.0, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--eta", required=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--H", "H", default=None, type=float)
@click.option("--j-max", required=True, type=click.IntRange(2))
@click.option("--j-min", default=3, show_default=True, type=click.IntRange(2))
@click.option("--bins", default=50, show_default=True, type=click.IntRange(1))
@_fail_on_error
def leaders_command(spec_text, seed, threads, out_dir, fmt, alpha, eta, H, j_max, j_min, bins) -> None:
    """Pointwise Hölder estimates from wavelet leaders (histogram plot data)."""
    spec = _load_spec(spec_text)
    holder = estimate_holder(compute_leaders(_coefficients(spec, alpha, eta, H, j_max, seed, threads)), j_min)
    edges, counts = holder.histogram(bins)
    centres = (edges[:-1] + edges[1:]) / 2
    if fmt == "csv":
        _emit(out_dir, "leaders.csv", to_csv(("h", "count"), zip(centres.tolist(), counts.tolist())))
    else:
        _emit(out_dir, "leaders.dat", plot_data(centres, counts))


@cli.command("spectrum")
@common_options
@click.option("--alpha", default=1.0, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--eta", required=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--H", "H", default=None, type=float)
@click.option("--j-max", required=True, type=click.IntRange(2))
@click.option("--h", "h_grid", multiple=True, type=float, help="Grid point (repeatable)")
@click.option("--gamma", default=0.05, show_default=True, type=click.FloatRange(min=0))
@click.option("--method", default="natural-cover", show_default=True,
              type=click.Choice(["natural-cover", "coarse-leader", "level-set"]))
@_fail_on_error
def spectrum_command(spec_text, seed, threads, out_dir, fmt, alpha, eta, H, j_max, h_grid, gamma, method) -> None:
    """Increasing spectrum D(h) = dim{x : h_f(x) <= h}."""
    spec = _load_spec(spec_text)
    coeffs = _coefficients(spec, alpha, eta, H, j_max, seed, threads)
    grid = list(h_grid) or [round(alpha + 0.1 * i, 10) for i in range(11)]
    estimate = increasing_spectrum(coeffs, grid, gamma, method=method)
    if fmt == "csv":
        _emit(out_dir, "spectrum.csv", to_csv(SPECTRUM_HEADER, estimate.rows()))
    else:
        payload = estimate.to_dict()
        payload["predicted"] = predicted_spectrum(estimate.h_grid, alpha, eta, coeffs.params.H).tolist()
        _emit(out_dir, "spectrum.json", to_json(sanitize(payload)))


@cli.command("limsup")
@common_options
@click.option("--alpha", default=1.0, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--eta", required=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--H", "H", default=None, type=float)
@click.option("--j-max", required=True, type=click.IntRange(1))
@click.option("--delta", "deltas", multiple=True, required=True, type=click.FloatRange(0, 1, min_open=True))
@click.option("--J1", "J1", default=8, show_default=True, type=click.IntRange(0))
@_fail_on_error
def limsup_command(spec_text, seed, threads, out_dir, fmt, alpha, eta, H, j_max, deltas, J1) -> None:
    """Dimension of the limsup of balls B(k 2^-j, 2^{-delta j}) over active positions."""
    spec = _load_spec(spec_text)
    coeffs = _coefficients(spec, alpha, eta, H, j_max, seed, threads)
    results = [limsup_cover(coeffs, d, J1) for d in deltas]
    if fmt == "csv":
        rows = [(r.delta, r.dim_hat, eta / r.delta, r.marked, r.flag) for r in results]
        _emit(out_dir, "limsup.csv", to_csv(("delta", "dim_hat", "expected", "marked", "flag"), rows))
    else:
        _emit(out_dir, "limsup.json", to_json(sanitize({"estimates": [r.to_dict() for r in results]})))


@cli.command("mdp")
@common_options
@click.option("--J", "J", required=True, type=click.IntRange(1))
@click.option("--b", "b", required=True, type=click.FloatRange(0, 1, min_open=True, max_open=True))
@click.option("--eps", required=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--s", "s", default=1.0, show_default=True, type=click.FloatRange(min=1))
@click.option("--b-n", "b_n", required=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--alpha", default=1.0, show_default=True, type=click.FloatRange(min=0, min_open=True))
@click.option("--eta", default=None, type=click.FloatRange(min=0, min_open=True),
              help="Lacunarity (default: every coefficient active)")
@click.option("--H", "H", default=None, type=float)
@click.option("--j-max", required=True, type=click.IntRange(1))
@click.option("--max-generations", default=3, show_default=True, type=click.IntRange(1))
@_fail_on_error
def mdp_command(spec_text, seed, threads, out_dir, fmt, J, b, eps, s, b_n, alpha, eta, H, j_max,
                max_generations) -> None:
    """Build nested ball generations and certify a Hölder exponent for their mass."""
    spec = _load_spec(spec_text)
    H = _H(spec, H)
    qc = prune(spec, build_ladder(J, b, j_max), H, eps, max_scale=j_max, threads=threads)
    if eta is None:
        coeffs = LwsCoefficients.all_active(spec, alpha, j_max)
    else:
        coeffs = _coefficients(spec, alpha, eta, H, j_max, seed, threads)
    tree = build_generations(qc, coeffs, s, b_n, max_generations=max_generations)
    cert = certify(tree)
    if fmt == "csv":
        _emit(out_dir, "mdp.csv", to_csv(("tau", "worst_exponent"), cert.profile))
    else:
        _emit(out_dir, "mdp.json", to_json(sanitize({
            "certificate": cert.to_dict(),
            "target": certified_target(H, b_n, s),
            "tree": tree_to_dict(tree),
        })))
    _finish([] if cert.self_check else ["certificate re-scan failed"])


def _parse_overrides(items: tuple[str, ...]) -> dict[str, Any]:
    overrides = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected key=value, got '{item}'", param_hint="--set")
        overrides[key.strip()] = yaml.safe_load(value)
    return overrides


@cli.command("run")
@click.argument("scenario")
@click.option("--seed", default=None, type=click.IntRange(0), help="Override the scenario seed")
@click.option("--set", "overrides", multiple=True, help="Step parameter override key=value (repeatable)")
@click.option("--j-max", default=None, type=click.IntRange(1), help="Maximum materialized scale")
@click.option("--threads", default=None, type=click.IntRange(1))
@click.option("--out-dir", default=None, type=click.Path(file_okay=False))
def run_command(scenario, seed, overrides, j_max, threads, out_dir) -> None:
    """Run a scenario file or a preset by name."""
    try:
        loaded = load_scenario(scenario) if Path(scenario).exists() else get_preset(scenario)
        parsed = _parse_overrides(overrides)
    except (ScenarioError, click.BadParameter) as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_ERROR)

    result = run_scenario(loaded, seed, parsed, out_dir=out_dir, threads=threads, max_scale=j_max)
    click.echo(f"▶  Scenario : {loaded.name}")
    click.echo(f"   Output   : {result.out_dir}")
    for path in result.artifacts:
        click.echo(f"  ✓  {path.relative_to(result.out_dir)}")
    if result.error:
        click.echo(f"❌  Run FAILED: {result.error}", err=True)
    elif result.failures:
        for msg in result.failures:
            click.echo(f"  ✗  {msg}", err=True)
    else:
        click.echo("✅  All steps passed")
    sys.exit(result.exit_code)


@cli.command("list-presets")
def list_presets_command() -> None:
    """Print the preset scenarios."""
    for name, description in list_presets():
        click.echo(f"{name:<20} {description}")


@cli.command("explain")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Run directory containing manifest.json")
def explain_command(run_dir: str) -> None:
    """List a run's artifacts and verify their sha256 hashes."""
    try:
        entries, mismatches = verify_manifest(run_dir)
    except ScenarioError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_ERROR)
    for entry in entries:
        click.echo(f"{entry['path']} {entry['sha256']} {entry['bytes']}")
    for msg in mismatches:
        click.echo(f"MISMATCH: {msg}", err=True)
    sys.exit(EXIT_AUDIT if mismatches else EXIT_OK)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
