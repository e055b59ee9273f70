"""Tools over synthesized lacunary wavelet series."""
from __future__ import annotations

from typing import Any, Sequence

from ..formats import sanitize
from ..leaders import increasing_spectrum, limsup_cover, predicted_spectrum
from ..lws import LwsCoefficients, LwsParams, rho_hat, synthesize
from ..mdp import build_generations, certified_target, certify
from ..quasicantor import build_ladder, prune
from ..rng import derive_seed
from .base import load_spec, resolve_H


def _synthesize(spec: dict[str, Any], alpha: float, eta: float, j_max: int, seed: int,
                H: float | None, max_scale: int | None) -> tuple[Any, LwsCoefficients]:
    fractal = load_spec(spec)
    params = LwsParams(alpha=alpha, eta=eta, H=resolve_H(fractal, H), j_max=j_max,
                       seed=derive_seed(seed, "lws"))
    return fractal, synthesize(fractal, params, max_scale=max_scale)


def lws_rho(
    spec: dict[str, Any],
    alpha: float,
    eta: float,
    j_max: int,
    seed: int = 0,
    H: float | None = None,
    max_scale: int | None = None,
) -> dict[str, Any]:
    """Synthesize once and regress log2 #A_j on j (expected slope eta)."""
    _, coeffs = _synthesize(spec, alpha, eta, j_max, seed, H, max_scale)
    return sanitize({"eta": eta, "total_active": coeffs.total, **rho_hat(coeffs).to_dict()})


def spectrum(
    spec: dict[str, Any],
    alpha: float,
    eta: float,
    j_max: int,
    h_grid: Sequence[float],
    seed: int = 0,
    gamma: float = 0.05,
    method: str = "natural-cover",
    H: float | None = None,
    max_scale: int | None = None,
) -> dict[str, Any]:
    """Increasing spectrum D(h) = dim{x : h_f(x) <= h} next to the (eta/alpha) h prediction."""
    _, coeffs = _synthesize(spec, alpha, eta, j_max, seed, H, max_scale)
    estimate = increasing_spectrum(coeffs, h_grid, gamma, method=method)
    out = estimate.to_dict()
    out["predicted"] = predicted_spectrum(estimate.h_grid, alpha, eta, coeffs.params.H).tolist()
    return sanitize(out)


def limsup(
    spec: dict[str, Any],
    alpha: float,
    eta: float,
    j_max: int,
    deltas: Sequence[float],
    J1: int,
    seed: int = 0,
    H: float | None = None,
    max_scale: int | None = None,
) -> dict[str, Any]:
    """Dimension of the limsup of balls B(k 2^-j, 2^{-delta j}) for each delta."""
    _, coeffs = _synthesize(spec, alpha, eta, j_max, seed, H, max_scale)
    return sanitize({
        "expected": [eta / d for d in deltas],
        "estimates": [limsup_cover(coeffs, d, J1).to_dict() for d in deltas],
    })


def mdp_certify(
    spec: dict[str, Any],
    J: int,
    b: float,
    eps: float,
    s: float,
    b_n: float,
    j_max: int,
    alpha: float = 1.0,
    eta: float | None = None,
    seed: int = 0,
    H: float | None = None,
    max_generations: int = 3,
    max_scale: int | None = None,
) -> dict[str, Any]:
    """Build nested ball generations on the quasi-Cantor set and certify their dimension.

    Args:
        eta: lacunarity of the synthesized coefficients; every coefficient is
             active when omitted.
    """
    fractal = load_spec(spec)
    H = resolve_H(fractal, H)
    qc = prune(fractal, build_ladder(J, b, j_max), H, eps, max_scale=max_scale)
    if eta is None:
        coeffs = LwsCoefficients.all_active(fractal, alpha, j_max, max_scale=max_scale)
    else:
        _, coeffs = _synthesize(spec, alpha, eta, j_max, seed, H, max_scale)
    tree = build_generations(qc, coeffs, s, b_n, max_generations=max_generations)
    return sanitize({
        "tree": tree.summary(),
        "certificate": certify(tree).to_dict(),
        "target": certified_target(H, b_n, s),
    })
