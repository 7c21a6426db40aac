"""CSV field dumps, energy traces and JSON summaries.

Field CSV: header ``x,y[,z],u,residual,A``, one node per row in C order of the
grid array (x slowest), values printed with 17 significant digits.  Trace CSV:
``iteration,J,grad_norm``.  A ``.gz`` suffix writes gzip.
"""

from __future__ import annotations

import json
import math
import subprocess
from importlib import metadata
from pathlib import Path

import numpy as np

from .energy import Field
from .grid import CylinderGrid

__all__ = ["field_columns", "write_field_csv", "read_field_csv", "write_trace_csv", "write_summary",
           "version_string", "to_jsonable"]

_FMT = "%.17g"


def field_columns(grid: CylinderGrid) -> list[str]:
    coords = ["x", "y", "z"][: grid.dim]
    return coords + ["u", "residual", "A"]


def write_field_csv(path: str | Path, U: Field, residual: np.ndarray, A: np.ndarray) -> Path:
    grid = U.grid
    cols = np.meshgrid(grid.x, *grid.y, indexing="ij")
    data = np.column_stack([c.ravel() for c in cols]
                           + [U.values.ravel(), np.asarray(residual, float).ravel(),
                              np.broadcast_to(A, grid.shape).ravel()])
    np.savetxt(path, data, fmt=_FMT, delimiter=",", header=",".join(field_columns(grid)), comments="")
    return Path(path)


def read_field_csv(path: str | Path, grid: CylinderGrid) -> Field:
    """Read the ``u`` column of a field dump written on ``grid``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    ncols = len(field_columns(grid))
    if data.shape != (grid.size, ncols):
        raise ValueError(f"{path}: expected {grid.size} rows x {ncols} columns for this grid, got {data.shape}")
    coords = np.meshgrid(grid.x, *grid.y, indexing="ij")
    for i, c in enumerate(coords):
        if not np.allclose(data[:, i], c.ravel(), rtol=0, atol=1e-12):
            raise ValueError(f"{path}: node coordinates do not match the configured grid")
    return Field(data[:, grid.dim].reshape(grid.shape), grid)


def write_trace_csv(path: str | Path, trace) -> Path:
    data = np.array([(it, J, g) for it, J, g in trace], dtype=float).reshape(-1, 3)
    np.savetxt(path, data, fmt=["%d", _FMT, _FMT], delimiter=",", header="iteration,J,grad_norm", comments="")
    return Path(path)


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_summary(path: str | Path, summary: dict) -> Path:
    Path(path).write_text(json.dumps(to_jsonable(summary), indent=2, allow_nan=False) + "\n")
    return Path(path)


def version_string() -> str:
    """Package version plus ``git describe`` of the source checkout when available."""
    try:
        base = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__ as base
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{base}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return base
