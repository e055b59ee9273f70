from __future__ import annotations

import logging
from typing import Any

from mcp.server.fastmcp import FastMCP

from . import __version__
from .config import configure_logging, get_settings
from .tools import catalog, geometry, signals

configure_logging()
logger = logging.getLogger("dyadic")

_SETTINGS = get_settings()
logger.info("=" * 50)
logger.info("Dyadic MCP Server Starting")
logger.info(f"  Version: {__version__}")
logger.info(f"  Max scale: {_SETTINGS.max_scale}")
logger.info(f"  Threads: {_SETTINGS.threads}")
logger.info(f"  Quasi-Cantor recursion: {_SETTINGS.qc_recursion}")
logger.info("=" * 50)

mcp = FastMCP("dyadic")


# --- Covers and dimension ---

@mcp.tool()
def cover(spec: dict[str, Any], j: int) -> dict[str, Any]:
    """
    Level cover I_j of a fractal support.
    Args:
        spec: e.g. {"kind": "digits", "m": 2, "digits": [0, 3]} or {"kind": "full"}.
        j: dyadic scale.
    """
    try:
        return geometry.cover(spec, j)
    except Exception as e:
        logger.error(f"cover failed: {e}")
        return {"error": str(e)}


@mcp.tool()
def dims(spec: dict[str, Any], j_min: int, j_max: int, step: int | None = None,
         H: float | None = None, eps: float | None = None) -> dict[str, Any]:
    """Box-dimension estimate over [j_min, j_max]; audits count bounds when eps is given."""
    try:
        return geometry.dims(spec, j_min, j_max, step=step, H=H, eps=eps)
    except Exception as e:
        logger.error(f"dims failed: {e}")
        return {"error": str(e)}


@mcp.tool()
def classify(spec: dict[str, Any], j: int, beta: float, eps: float,
             H: float | None = None) -> dict[str, Any]:
    """Sort the intervals of I_j into slow, normal and fast duplication."""
    try:
        return geometry.duplication(spec, j, beta, eps, H=H)
    except Exception as e:
        logger.error(f"classify failed: {e}")
        return {"error": str(e)}


@mcp.tool()
def quasicantor(spec: dict[str, Any], J: int, b: float, eps: float, H: float | None = None,
                ell0: int | None = None, mode: str | None = None) -> dict[str, Any]:
    """
    Prune the covers along the ladder floor((1+b)^i J) and audit the quasi-Cantor set.
    Args:
        mode: "previous" (default) or "fixed-point" recursion.
    """
    try:
        return geometry.quasicantor(spec, J, b, eps, H=H, ell0=ell0, mode=mode)
    except Exception as e:
        logger.error(f"quasicantor failed: {e}")
        return {"error": str(e)}


# --- Lacunary wavelet series ---

@mcp.tool()
def lws_rho(spec: dict[str, Any], alpha: float, eta: float, j_max: int, seed: int = 0,
            H: float | None = None) -> dict[str, Any]:
    """Growth rate of the active coefficient counts (slope of log2 #A_j)."""
    try:
        return signals.lws_rho(spec, alpha, eta, j_max, seed=seed, H=H)
    except Exception as e:
        logger.error(f"lws_rho failed: {e}")
        return {"error": str(e)}


@mcp.tool()
def spectrum(spec: dict[str, Any], alpha: float, eta: float, j_max: int, h_grid: list[float],
             seed: int = 0, gamma: float = 0.05, method: str = "natural-cover",
             H: float | None = None) -> dict[str, Any]:
    """
    Increasing multifractal spectrum of a lacunary wavelet series.
    Args:
        method: "natural-cover", "coarse-leader" or "level-set".
    """
    try:
        return signals.spectrum(spec, alpha, eta, j_max, h_grid, seed=seed, gamma=gamma,
                                method=method, H=H)
    except Exception as e:
        logger.error(f"spectrum failed: {e}")
        return {"error": str(e)}


@mcp.tool()
def limsup(spec: dict[str, Any], alpha: float, eta: float, j_max: int, deltas: list[float],
           J1: int, seed: int = 0, H: float | None = None) -> dict[str, Any]:
    """Dimension of the limsup set of shrunk balls around active positions."""
    try:
        return signals.limsup(spec, alpha, eta, j_max, deltas, J1, seed=seed, H=H)
    except Exception as e:
        logger.error(f"limsup failed: {e}")
        return {"error": str(e)}


@mcp.tool()
def mdp_certify(spec: dict[str, Any], J: int, b: float, eps: float, s: float, b_n: float,
                j_max: int, alpha: float = 1.0, eta: float | None = None, seed: int = 0,
                H: float | None = None, max_generations: int = 3) -> dict[str, Any]:
    """Mass-distribution lower bound for the dimension of nested ball generations."""
    try:
        return signals.mdp_certify(spec, J, b, eps, s, b_n, j_max, alpha=alpha, eta=eta,
                                   seed=seed, H=H, max_generations=max_generations)
    except Exception as e:
        logger.error(f"mdp_certify failed: {e}")
        return {"error": str(e)}


# --- Scenarios ---

@mcp.tool()
def presets() -> dict[str, Any]:
    """List the built-in scenario presets."""
    return catalog.presets()


@mcp.tool()
def run_preset(name: str, out_dir: str, seed: int | None = None) -> dict[str, Any]:
    """Run a preset scenario; artifacts and manifest.json land in out_dir."""
    try:
        return catalog.run_preset(name, out_dir, seed=seed)
    except Exception as e:
        logger.error(f"run_preset failed: {e}")
        return {"error": str(e), "available": [n for n, _ in catalog.list_presets()]}
