from __future__ import annotations

from pathlib import Path
from typing import Any

from ..scenarios import get_preset, list_presets, run_scenario


def presets() -> dict[str, Any]:
    """Names and one-line descriptions of the built-in scenarios."""
    return {"presets": [{"name": n, "description": d} for n, d in list_presets()]}


def run_preset(name: str, out_dir: str, seed: int | None = None,
               overrides: dict[str, Any] | None = None) -> dict[str, Any]:
    """Run a preset scenario into ``out_dir``.

    Returns:
        {"exit_code": 0|1|2, "manifest": path, "artifacts": [...], "failures": [...]}
    """
    result = run_scenario(get_preset(name), seed, overrides, out_dir=out_dir)
    return {
        "exit_code": result.exit_code,
        "manifest": str(result.manifest),
        "artifacts": [str(Path(p).relative_to(result.out_dir)) for p in result.artifacts],
        "failures": result.failures,
        "error": result.error,
    }
