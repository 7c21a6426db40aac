"""Tools for the admissible class of fields going from +1 (left) to -1 (right)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import Field
from .grid import CylinderGrid, slab_integrals

__all__ = [
    "TailProfile",
    "NoTransitionError",
    "seed_phi",
    "clip",
    "translate",
    "tail_norms",
    "tail_sup",
    "normalization_shifts",
    "glue",
    "in_gamma",
    "default_tau",
]


class NoTransitionError(ValueError):
    """The field's tail distances never reach tau, so it is not transition-like."""


@dataclass(frozen=True)
class TailProfile:
    k: int
    left_norm: float   # ||P_k U - 1|| on the unit slab
    right_norm: float  # ||P_k U + 1|| on the unit slab


def default_tau(grid: CylinderGrid) -> float:
    return 0.1 * np.sqrt(grid.slab_measure)


def seed_phi(j: int, grid: CylinderGrid) -> Field:
    """1 for x <= j, 2j + 1 - 2x on (j, j+1], -1 beyond."""
    if not (-grid.T <= j and j + 1 <= grid.T):
        raise ValueError(f"transition slab ({j}, {j + 1}) lies outside [-{grid.T}, {grid.T}]")
    # ramp from the integer node offset inside the slab, so translated seeds agree bit-exactly
    m = grid.per_unit
    off = np.arange(grid.nx) - (j + grid.T) * m
    prof = np.where(off <= 0, 1.0, np.where(off <= m, 1.0 - 2.0 * off / m, -1.0))
    return Field(np.broadcast_to(prof.reshape((-1,) + (1,) * grid.cross.dim), grid.shape), grid)


def clip(U: Field) -> Field:
    return Field(np.clip(U.values, -1.0, 1.0), U.grid)


def translate(U: Field, k: int) -> Field:
    """P_k U(x, y) = U(x + k, y); vacated slabs take the tail value (+1 left, -1 right)."""
    grid = U.grid
    k = int(k)
    if abs(k) >= 2 * grid.T:
        raise ValueError(f"shift {k} must satisfy |k| < 2T = {2 * grid.T}")
    n = k * grid.per_unit
    out = np.empty_like(U.values)
    if n > 0:
        out[:-n] = U.values[n:]
        out[-n:] = -1.0
    elif n < 0:
        out[-n:] = U.values[:n]
        out[:-n] = 1.0
    else:
        out[:] = U.values
    return Field(out, grid)


def tail_norms(U: Field) -> list[TailProfile]:
    """L2 distances of every unit slab of U to +1 and to -1."""
    grid = U.grid
    left = np.sqrt(np.maximum(slab_integrals((U.values - 1.0) ** 2, grid), 0.0))
    right = np.sqrt(np.maximum(slab_integrals((U.values + 1.0) ** 2, grid), 0.0))
    lo, _ = grid.slab_index_range
    return [TailProfile(lo + i, float(a), float(b)) for i, (a, b) in enumerate(zip(left, right))]


def tail_sup(U: Field) -> list[tuple[int, float, float]]:
    """Per slab: (k, sup |U - 1|, sup |U + 1|) over the slab's nodes, i.e. uniformly in y."""
    grid = U.grid
    out = []
    for k in range(*grid.slab_index_range):
        v = U.values[grid.slab_nodes(k)]
        out.append((k, float(np.max(np.abs(v - 1.0))), float(np.max(np.abs(v + 1.0)))))
    return out


def normalization_shifts(U: Field, tau: float) -> tuple[int, int]:
    """Shifts (k1, k2) normalizing the left and right tails at level tau.

    k1 is the first slab from the left with distance to 1 at least tau (all
    slabs to its left are tau-close to 1); k2 is the first slab from the right
    with distance to -1 at least tau.
    """
    grid = U.grid
    if not 0 < tau < np.sqrt(grid.slab_measure):
        raise ValueError(f"tau must lie in (0, sqrt|Omega_1|), got {tau}")
    prof = tail_norms(U)
    k1 = next((p.k for p in prof if p.left_norm >= tau), None)
    k2 = next((p.k for p in reversed(prof) if p.right_norm >= tau), None)
    if k1 is None or k2 is None:
        side = "left (distance to +1)" if k1 is None else "right (distance to -1)"
        raise NoTransitionError(f"no slab reaches distance tau = {tau:g} on the {side} tail")
    return k1, k2


def glue(U: Field, j: int) -> Field:
    """1 for x <= j, affine blend (j+1-x) + (x-j) U on (j, j+1], U beyond."""
    grid = U.grid
    if not (-grid.T <= j and j + 1 <= grid.T):
        raise ValueError(f"glue slab ({j}, {j + 1}) lies outside the grid")
    x = grid.x.reshape((-1,) + (1,) * grid.cross.dim)
    blend = ((j + 1) - x) + (x - j) * U.values
    out = np.where(x <= j, 1.0, np.where(x <= j + 1, blend, U.values))
    return Field(out, grid)


def in_gamma(U: Field, tol: float = 0.0) -> bool:
    """Finite-window membership proxy: end slabs within ``tol`` of the tail values."""
    prof = tail_norms(U)
    return prof[0].left_norm <= tol and prof[-1].right_norm <= tol
