"""On-disk formats: state JSON and point-set CSV, both versioned with ``format = 1``.

Floats are written with ``repr``, which round-trips exactly (17 significant
digits at most).
"""

from __future__ import annotations

import io
import json
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .majorana import PointSet
from .spin import NORM_TOL, SpinState

FORMAT_VERSION = 1
NORM_SLACK = 1e-6

PathLike = Union[str, Path]


class FormatError(ValueError):
    """Malformed state or point-set file."""


def state_to_dict(state: SpinState, provenance: Optional[dict] = None) -> dict:
    out = {
        "format": FORMAT_VERSION,
        "n": state.n_qubits,
        "amplitudes": [[float(a.real), float(a.imag)] for a in state.amplitudes],
    }
    if provenance is not None:
        out["provenance"] = provenance
    return out


def state_from_dict(data: dict) -> tuple[SpinState, dict]:
    """Parse a state object; returns the renormalized state and its provenance."""
    if not isinstance(data, dict):
        raise FormatError("state JSON must be an object")
    version = data.get("format", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version!r}")
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise FormatError("'n' must be a positive integer")
    raw = data.get("amplitudes")
    if not isinstance(raw, list) or len(raw) != n + 1:
        raise FormatError(f"'amplitudes' must list {n + 1} entries")
    try:
        amps = np.array([complex(float(re), float(im)) for re, im in raw])
    except (TypeError, ValueError) as exc:
        raise FormatError("each amplitude must be a [re, im] pair of numbers") from exc
    if not np.all(np.isfinite(amps)):
        raise FormatError("amplitudes must be finite")
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1) > NORM_SLACK:
        raise FormatError(f"norm {norm!r} outside 1 +- {NORM_SLACK}")
    # leave already-normalized vectors untouched so round trips are bit-exact
    state = SpinState(n, amps) if abs(norm**2 - 1) <= NORM_TOL / 2 else SpinState.normalized(n, amps)
    return state, data.get("provenance") or {}


def dump_state(state: SpinState, provenance: Optional[dict] = None) -> str:
    return json.dumps(state_to_dict(state, provenance), indent=2)


def load_state(text: str) -> tuple[SpinState, dict]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return state_from_dict(data)


def write_state(path: PathLike, state: SpinState, provenance: Optional[dict] = None) -> None:
    Path(path).write_text(dump_state(state, provenance) + "\n")


def read_state(path: PathLike) -> tuple[SpinState, dict]:
    return load_state(Path(path).read_text())


def dump_points(points: PointSet) -> str:
    buf = io.StringIO()
    buf.write(f"# format={FORMAT_VERSION}\n")
    for x, y, z in points.points:
        buf.write(f"{x:.17g},{y:.17g},{z:.17g}\n")
    return buf.getvalue()


def load_points(text: str) -> PointSet:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            tag = line[1:].strip()
            if tag.startswith("format=") and tag != f"format={FORMAT_VERSION}":
                raise FormatError(f"unsupported point-set {tag}")
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected x,y,z")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise FormatError("point set is empty")
    pts = np.array(rows)
    if not np.all(np.isfinite(pts)):
        raise FormatError("coordinates must be finite")
    try:
        return PointSet.of(pts)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_points(path: PathLike, points: PointSet) -> None:
    Path(path).write_text(dump_points(points))


def read_points(path: PathLike) -> PointSet:
    return load_points(Path(path).read_text())


def jsonable(obj):
    """Recursively make ``obj`` strict JSON: NaN becomes null, infinities become strings."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return jsonable(obj.item())
    return obj
