"""Shared helpers for the dict-returning tool adapters."""
import logging
from typing import Any

from ..covers import FractalSpec, parse_spec, theoretical_dimension
from ..errors import InvalidParameterError

logger = logging.getLogger("dyadic")

# Largest number of indices a tool echoes back before truncating.
MAX_LISTED = 256


def load_spec(spec: dict[str, Any] | FractalSpec) -> FractalSpec:
    """Validate a JSON spec such as ``{"kind": "digits", "m": 2, "digits": [0, 3]}``."""
    return parse_spec(spec)


def resolve_H(spec: FractalSpec, H: float | None) -> float:
    if H is not None:
        return H
    value = theoretical_dimension(spec)
    if value is None:
        raise InvalidParameterError(
            "H is required for explicit covers.\n"
            "SOLUTION: Pass H (the box dimension of the set) explicitly."
        )
    return value


def listed(values: Any, limit: int = MAX_LISTED) -> dict[str, Any]:
    """First ``limit`` entries of an index array plus a truncation flag."""
    items = [int(v) for v in list(values)[:limit]]
    return {"items": items, "truncated": len(values) > limit}
