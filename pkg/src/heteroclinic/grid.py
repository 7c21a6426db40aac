"""Tensor grids on the truncated cylinder (-T, T) x D and their difference operators.

Axis 0 of every grid function is the axial variable x; the remaining axes span
the rectangular cross-section D with homogeneous Neumann conditions.  Unit
slabs (k, k+1) x D are aligned with grid lines so slab integrals partition the
domain integral exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "CrossSection",
    "CylinderGrid",
    "GridError",
    "build_grid",
    "gradient_sq",
    "laplacian",
    "slab_integral",
    "slab_integrals",
    "integrate",
    "trapezoid_weights",
]


class GridError(ValueError):
    """Raised when grid parameters violate the slab-alignment constraints."""


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class CrossSection:
    """Rectangular cross-section D = (0, L1) [x (0, L2)]."""

    extents: tuple[float, ...] = (1.0,)
    nodes: tuple[int, ...] = (3,)

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(float(e) for e in self.extents))
        object.__setattr__(self, "nodes", tuple(int(n) for n in self.nodes))
        if len(self.extents) not in (1, 2):
            raise GridError(f"cross-section dimension must be 1 or 2, got {len(self.extents)}")
        if len(self.nodes) != len(self.extents):
            raise GridError("cross-section extents and nodes must have equal length")
        if any(not np.isfinite(e) or e <= 0 for e in self.extents):
            raise GridError(f"cross-section extents must be positive, got {self.extents}")
        if any(n < 3 for n in self.nodes):
            raise GridError(f"each cross-section axis needs at least 3 nodes, got {self.nodes}")

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def measure(self) -> float:
        return float(np.prod(self.extents))

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(L / (n - 1) for L, n in zip(self.extents, self.nodes))

    def coordinates(self) -> tuple[np.ndarray, ...]:
        return tuple(L * np.arange(n) / (n - 1) for L, n in zip(self.extents, self.nodes))


@dataclass(frozen=True)
class CylinderGrid:
    """Nodes x_i = (i - T*m)/m, i = 0..2Tm, with m = 1/h_x, times the cross-section grid."""

    T: int
    per_unit: int
    cross: CrossSection

    @property
    def h_x(self) -> float:
        return 1.0 / self.per_unit

    @property
    def h_y(self) -> tuple[float, ...]:
        return self.cross.spacings

    @property
    def dim(self) -> int:
        """Full problem dimension N."""
        return self.cross.dim + 1

    @property
    def nx(self) -> int:
        return 2 * self.T * self.per_unit + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nx, *self.cross.nodes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_slabs(self) -> int:
        return 2 * self.T

    @property
    def slab_index_range(self) -> tuple[int, int]:
        return (-self.T, self.T)

    @property
    def slab_measure(self) -> float:
        """|Omega_1| = |D| (unit slabs)."""
        return self.cross.measure

    @cached_property
    def x(self) -> np.ndarray:
        x = (np.arange(self.nx) - self.T * self.per_unit) / self.per_unit
        x.flags.writeable = False
        return x

    @cached_property
    def y(self) -> tuple[np.ndarray, ...]:
        return self.cross.coordinates()

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays (x, y1[, y2])."""
        axes = (self.x, *self.y)
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))

    @cached_property
    def wx(self) -> np.ndarray:
        return trapezoid_weights(self.nx, self.h_x)

    @cached_property
    def wy(self) -> np.ndarray:
        """Cross-section trapezoid weights, shaped like one axial plane."""
        w = np.ones(self.cross.nodes)
        for axis, (n, h) in enumerate(zip(self.cross.nodes, self.h_y)):
            shape = [1] * self.cross.dim
            shape[axis] = n
            w = w * trapezoid_weights(n, h).reshape(shape)
        return w

    @cached_property
    def weights(self) -> np.ndarray:
        """Nodal trapezoid weights for the whole truncated domain."""
        return self.wx.reshape((-1,) + (1,) * self.cross.dim) * self.wy

    def slab_nodes(self, k: int) -> slice:
        """Axial index range (inclusive of both faces) of slab (k, k+1)."""
        self._check_slab(k)
        start = (k + self.T) * self.per_unit
        return slice(start, start + self.per_unit + 1)

    def slab_of(self, x: float) -> int:
        return int(np.clip(np.floor(x), -self.T, self.T - 1))

    def _check_slab(self, k: int) -> None:
        if not -self.T <= k < self.T:
            raise GridError(f"slab index {k} outside [{-self.T}, {self.T})")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


def build_grid(T: int, h_x: float, cross: CrossSection) -> CylinderGrid:
    """Build a slab-aligned grid on (-T, T) x D.

    ``T`` must be a positive integer and ``1/h_x`` a positive integer, so every
    plane x = k lies on a grid line.
    """
    if isinstance(T, bool) or int(T) != T or T < 1:
        raise GridError(f"T must be a positive integer, got {T!r}")
    if not h_x > 0:
        raise GridError(f"h_x must be positive, got {h_x!r}")
    m = round(1.0 / h_x)
    if m < 1 or abs(m * h_x - 1.0) > 1e-9:
        raise GridError(f"1/h_x must be a positive integer so slabs align with grid lines; got h_x={h_x!r}")
    return CylinderGrid(T=int(T), per_unit=int(m), cross=cross)


def _cross_first_derivative(U: np.ndarray, axis: int, h: float) -> np.ndarray:
    # ghost reflection u[-1] = u[1] makes the boundary centered difference vanish
    d = np.zeros_like(U)
    inner = [slice(None)] * U.ndim
    inner[axis] = slice(1, -1)
    hi = [slice(None)] * U.ndim
    hi[axis] = slice(2, None)
    lo = [slice(None)] * U.ndim
    lo[axis] = slice(None, -2)
    d[tuple(inner)] = (U[tuple(hi)] - U[tuple(lo)]) / (2 * h)
    return d


def gradient_sq(U: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    """Nodewise |grad U|^2 from second-order differences.

    Centered in the interior, one-sided second order at the axial end planes,
    ghost-reflected (zero normal derivative) on the lateral boundary.
    """
    U = np.asarray(U, dtype=float)
    _check_shape(U, grid)
    ux = np.gradient(U, grid.h_x, axis=0, edge_order=2)
    out = ux * ux
    for axis, h in enumerate(grid.h_y, start=1):
        uy = _cross_first_derivative(U, axis, h)
        out += uy * uy
    return out


def laplacian(U: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    """Standard (2N+1)-point Laplacian with Neumann ghost reflection laterally.

    The axial end planes are not evaluated and carry NaN.
    """
    U = np.asarray(U, dtype=float)
    _check_shape(U, grid)
    out = np.full_like(U, np.nan)
    out[1:-1] = (U[2:] - 2.0 * U[1:-1] + U[:-2]) / grid.h_x**2
    for axis, h in enumerate(grid.h_y, start=1):
        out[1:-1] += _cross_second_difference(U, axis, h)[1:-1]
    return out


def _cross_second_difference(U: np.ndarray, axis: int, h: float) -> np.ndarray:
    Um = np.moveaxis(U, axis, 0)
    # even reflection: ghost at -1 equals node 1, ghost at n equals node n-2
    padded = np.concatenate([Um[1:2], Um, Um[-2:-1]], axis=0)
    d2 = (padded[2:] - 2.0 * padded[1:-1] + padded[:-2]) / h**2
    return np.moveaxis(d2, 0, axis)


def _cross_integrate(f: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    axes = tuple(range(1, f.ndim))
    return np.sum(f * grid.wy, axis=axes)


def slab_integrals(f: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    """Trapezoidal integrals of a nodal function over every unit slab, left to right."""
    f = np.asarray(f, dtype=float)
    _check_shape(f, grid)
    q = _cross_integrate(f, grid)
    return axial_slab_sums(q, grid)


def axial_slab_sums(q: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    """Per-slab trapezoid sums of an axial nodal profile; shared faces get half weight on each side."""
    m = grid.per_unit
    body = q[:-1].reshape(grid.n_slabs, m).sum(axis=1)
    return grid.h_x * (body - 0.5 * q[:-1:m] + 0.5 * q[m::m])


def slab_integral(f: np.ndarray, k: int, grid: CylinderGrid) -> float:
    """Trapezoidal integral of ``f`` over the slab (k, k+1) x D."""
    sl = grid.slab_nodes(k)
    f = np.asarray(f, dtype=float)
    _check_shape(f, grid)
    q = _cross_integrate(f[sl], grid)
    return float(grid.h_x * (q.sum() - 0.5 * (q[0] + q[-1])))


def integrate(f: np.ndarray, grid: CylinderGrid) -> float:
    """Whole-domain trapezoidal integral."""
    f = np.asarray(f, dtype=float)
    _check_shape(f, grid)
    return float(np.sum(f * grid.weights))


def _check_shape(U: np.ndarray, grid: CylinderGrid) -> None:
    if U.shape != grid.shape:
        raise ValueError(f"grid function has shape {U.shape}, grid expects {grid.shape}")
