"""On-disk formats: cover dumps, CSV tables, JSON reports and plot data.

Every writer is deterministic: same object in, same bytes out.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .covers import FractalSpec, LevelCover
from .errors import InvalidParameterError
from .lws import LwsCoefficients, LwsParams
from .mdp import GenerationTree

RLE_MAGIC = "# dyadic-cover v1"


# --- LevelCover ---

def cover_to_rle(cover: LevelCover) -> str:
    """Header line, then one ``start length`` line per run of members."""
    idx = cover.indices
    lines = [f"{RLE_MAGIC} j={cover.j} count={cover.count} exactness={cover.exactness}"]
    if idx.size:
        breaks = np.flatnonzero(np.diff(idx) != 1) + 1
        starts = np.concatenate([[0], breaks])
        stops = np.concatenate([breaks, [idx.size]])
        lines.extend(f"{int(idx[a])} {int(b - a)}" for a, b in zip(starts, stops))
    return "\n".join(lines) + "\n"


def cover_from_rle(text: str) -> LevelCover:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(RLE_MAGIC):
        raise InvalidParameterError("not a run-length cover dump")
    fields = dict(item.split("=", 1) for item in lines[0][len(RLE_MAGIC):].split())
    j = int(fields["j"])
    bits = np.zeros(1 << j, dtype=bool)
    for line in lines[1:]:
        start, length = (int(v) for v in line.split())
        bits[start:start + length] = True
    cover = LevelCover(j=j, bits=bits, exactness=fields.get("exactness", "exact"))
    if cover.count != int(fields["count"]):
        raise InvalidParameterError(f"cover dump declares {fields['count']} members, found {cover.count}")
    return cover


def cover_to_bytes(cover: LevelCover) -> bytes:
    """8-byte little-endian header (scale, count) followed by the packed bits."""
    header = np.array([cover.j, cover.count], dtype="<u4").tobytes()
    return header + np.packbits(cover.bits, bitorder="little").tobytes()


def cover_from_bytes(data: bytes, exactness: str = "exact") -> LevelCover:
    if len(data) < 8:
        raise InvalidParameterError("bit dump shorter than its header")
    j, count = (int(v) for v in np.frombuffer(data[:8], dtype="<u4"))
    packed = np.frombuffer(data[8:], dtype=np.uint8)
    bits = np.unpackbits(packed, count=1 << j, bitorder="little").astype(bool)
    cover = LevelCover(j=j, bits=bits, exactness=exactness)
    if cover.count != count:
        raise InvalidParameterError(f"bit dump declares {count} members, found {cover.count}")
    return cover


# --- tables ---

def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "-inf" if value < 0 else "inf"
        return repr(value)
    return str(value)


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


DIMS_HEADER = ("j", "count", "log2count", "bound_low", "bound_high", "pass")
DUPLICATION_HEADER = ("j", "k", "child_count", "class")
SPECTRUM_HEADER = ("h", "D_leq", "window_lo", "window_hi", "residual")


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return _finite(float(value))
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _finite(value: float) -> float | None:
    return value if math.isfinite(value) else None


def sanitize(payload: Any) -> Any:
    """Replace non-finite floats by None so the payload is strict JSON."""
    if isinstance(payload, dict):
        return {k: sanitize(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [sanitize(v) for v in payload]
    if isinstance(payload, (float, np.floating)):
        return _finite(float(payload))
    return payload


# --- LWS coefficients ---

def lws_to_csv(coeffs: LwsCoefficients) -> str:
    """Sparse (j, k) listing of the active positions, parameters in the header."""
    if coeffs.params is not None:
        p = coeffs.params
        comments = [f"alpha={p.alpha!r} eta={p.eta!r} H={p.H!r} j_max={p.j_max} seed={p.seed}"]
    else:
        comments = [f"alpha={coeffs.alpha!r} j_max={coeffs.j_max}"]
    rows = ((j, int(k)) for j in range(coeffs.j_max + 1) for k in coeffs.at(j))
    return to_csv(("j", "k"), rows, comments)


def lws_from_csv(text: str, spec: FractalSpec) -> LwsCoefficients:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise InvalidParameterError("coefficient file lacks its parameter header")
    fields = dict(item.split("=", 1) for item in lines[0][2:].split())
    alpha = float(fields["alpha"])
    j_max = int(fields["j_max"])
    params = None
    if "eta" in fields:
        params = LwsParams(alpha=alpha, eta=float(fields["eta"]), H=float(fields["H"]),
                           j_max=j_max, seed=int(fields["seed"]))
    buckets: dict[int, list[int]] = {j: [] for j in range(j_max + 1)}
    for row in csv.DictReader(lines[1:]):
        buckets[int(row["j"])].append(int(row["k"]))
    active = {}
    for j, ks in buckets.items():
        arr = np.asarray(ks, dtype=np.int64)
        arr.setflags(write=False)
        active[j] = arr
    return LwsCoefficients(spec=spec, alpha=alpha, j_max=j_max, active=active, params=params)


# --- generation trees ---

def tree_to_dict(tree: GenerationTree) -> dict[str, Any]:
    """Ball intervals per generation with masses as exact fractions."""
    return {
        "c": tree.c,
        "schedule": list(tree.schedule),
        "shallow": tree.shallow,
        "params": sanitize(tree.params),
        "generations": [
            {
                "index": g.index,
                "rung": g.rung,
                "size_exponent": g.size_exponent,
                "grid": g.grid,
                "lo": g.lo.tolist(),
                "hi": g.hi.tolist(),
                "parent": g.parent.tolist(),
                "mass": [f"1/{int(d)}" for d in g.denominators],
                "mass_total": str(g.mass_total()),
            }
            for g in tree.generations
        ],
    }


# --- plot data ---

def plot_data(xs: Sequence[float], ys: Sequence[float]) -> str:
    """Two whitespace-separated columns; missing values as ``nan``."""
    lines = []
    for x, y in zip(xs, ys):
        y = float(y)
        lines.append(f"{_cell(float(x))} {_cell(y) if math.isfinite(y) else 'nan'}")
    return "\n".join(lines) + "\n"


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def write_bytes(path: Path, data: bytes) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return path
