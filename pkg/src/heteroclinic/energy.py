"""Discrete renormalized energy, its gradient, PDE residuals and the beta(tau) sub-problem.

The Dirichlet part is assembled from edge differences (u[i+1] - u[i]) / h, which
are centered second-order at edge midpoints; edges never straddle a slab face,
so every edge belongs to exactly one slab.  The potential part uses nodal
trapezoid weights.  With this pairing the exact gradient of the discrete energy
is W * (-Lap_h U + A V'(U)) with W the trapezoid weights and Lap_h the
ghost-reflected (2N+1)-point Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import grid as gridmod
from .grid import CylinderGrid
from .model import Potential

__all__ = [
    "Field",
    "EnergyBreakdown",
    "DiscreteEnergy",
    "lagrangian",
    "total_energy",
    "energy_gradient",
    "pde_residual",
    "residual_norms",
    "beta_functional",
    "compute_beta",
    "BetaResult",
    "half_slab_distances",
]


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values of U on a cylinder grid. Values are copied and made read-only."""

    values: np.ndarray
    grid: CylinderGrid

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def in_bounds(self) -> bool:
        return bool(np.all(np.abs(self.values) <= 1.0))

    def axial_profile(self) -> np.ndarray:
        """Cross-section average of U at each axial node."""
        return gridmod._cross_integrate(self.values, self.grid) / self.grid.cross.measure

    def zero_crossing(self) -> Optional[float]:
        """First x where the cross-averaged profile changes sign, by linear interpolation."""
        p = self.axial_profile()
        idx = np.flatnonzero((p[:-1] > 0) & (p[1:] <= 0))
        if idx.size == 0:
            return None
        i = int(idx[0])
        x = self.grid.x
        return float(x[i] + (x[i + 1] - x[i]) * p[i] / (p[i] - p[i + 1]))


@dataclass(frozen=True)
class EnergyBreakdown:
    per_slab: np.ndarray
    total: float
    dirichlet_part: float
    potential_part: float

    @property
    def slab_indices(self) -> np.ndarray:
        n = len(self.per_slab)
        return np.arange(-n // 2, n // 2)

    @property
    def equipartition_ratio(self) -> float:
        return self.dirichlet_part / self.potential_part if self.potential_part > 0 else float("inf")


class DiscreteEnergy:
    """Evaluator for sum_k int_{Omega_k} gradient_weight |grad U|^2 + A V(U) on one grid.

    ``gradient_weight`` is 1/2 for the renormalized energy and 1 for the beta functional.
    """

    def __init__(self, grid: CylinderGrid, A, V: Potential, gradient_weight: float = 0.5):
        self.grid = grid
        A = np.asarray(A, dtype=float)
        self.A = np.broadcast_to(A, grid.shape)
        self.V = V
        self.c = float(gradient_weight)
        self.W = grid.weights
        self._WA = self.W * self.A
        hx = grid.h_x
        # per-edge weights: axial edges carry h_x * wy; cross edges carry (other-axis trapezoid) * h_y
        self._ex_w = (self.c / hx) * grid.wy
        self._ey_w = []
        for axis, hy in enumerate(grid.h_y, start=1):
            w = grid.weights / trapezoid_along(grid, axis)
            self._ey_w.append((axis, (self.c / hy) * np.take(w, range(grid.shape[axis] - 1), axis=axis)))

    def _edges(self, u):
        dx = np.diff(u, axis=0)
        ex = self._ex_w * dx * dx
        ey = []
        for axis, w in self._ey_w:
            d = np.diff(u, axis=axis)
            ey.append((axis, w * d * d, d))
        return dx, ex, ey

    def value(self, u: np.ndarray) -> float:
        return self.value_and_gradient(u)[0]

    def value_and_gradient(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        u = np.asarray(u, dtype=float)
        dx, ex, ey = self._edges(u)
        pot = self._WA * self.V.value(u)
        E = float(ex.sum() + sum(e.sum() for _, e, _ in ey) + pot.sum())
        g = self._WA * self.V.deriv(u)
        fx = (2.0 * self._ex_w) * dx
        g[:-1] -= fx
        g[1:] += fx
        for (axis, w), (_, _, d) in zip(self._ey_w, ey):
            f = (2.0 * w) * d
            lo = [slice(None)] * u.ndim
            hi = [slice(None)] * u.ndim
            lo[axis] = slice(None, -1)
            hi[axis] = slice(1, None)
            g[tuple(lo)] -= f
            g[tuple(hi)] += f
        return E, g

    def breakdown(self, u: np.ndarray) -> EnergyBreakdown:
        u = np.asarray(u, dtype=float)
        grid = self.grid
        _, ex, ey = self._edges(u)
        m = grid.per_unit
        axes = tuple(range(1, u.ndim))
        dir_slab = ex.sum(axis=axes).reshape(grid.n_slabs, m).sum(axis=1)
        # cross-edge and potential terms are nodal in x: integrate with per-slab trapezoid in x
        nodal_y = np.zeros(grid.nx)
        for _, e, _ in ey:
            nodal_y += e.sum(axis=axes)
        nodal_y /= grid.wx
        dir_slab = dir_slab + gridmod.axial_slab_sums(nodal_y, grid)
        pot_nodal = (self._WA * self.V.value(u)).sum(axis=axes) / grid.wx
        pot_slab = gridmod.axial_slab_sums(pot_nodal, grid)
        per_slab = dir_slab + pot_slab
        return EnergyBreakdown(per_slab=per_slab, total=float(per_slab.sum()),
                               dirichlet_part=float(dir_slab.sum()), potential_part=float(pot_slab.sum()))

    def residual(self, u: np.ndarray) -> np.ndarray:
        """(2c)(-Lap_h u) + A V'(u); NaN on the axial end planes."""
        u = np.asarray(u, dtype=float)
        return -2.0 * self.c * gridmod.laplacian(u, self.grid) + self.A * self.V.deriv(u)


def trapezoid_along(grid: CylinderGrid, axis: int) -> np.ndarray:
    """Trapezoid weights of one axis, shaped to broadcast against grid functions."""
    n = grid.shape[axis]
    h = grid.h_x if axis == 0 else grid.h_y[axis - 1]
    shape = [1] * len(grid.shape)
    shape[axis] = n
    return gridmod.trapezoid_weights(n, h).reshape(shape)


def _values(U) -> np.ndarray:
    return U.values if isinstance(U, Field) else np.asarray(U, dtype=float)


def lagrangian(U: Field, A, V: Potential) -> np.ndarray:
    """Nodewise 1/2 |grad U|^2 + A V(U) with the nodal second-order gradient."""
    u = _values(U)
    return 0.5 * gridmod.gradient_sq(u, U.grid) + np.asarray(A) * V.value(u)


def total_energy(U: Field, A, V: Potential) -> EnergyBreakdown:
    """Per-slab energies I_k and their sum J for the coefficient samples ``A``."""
    return DiscreteEnergy(U.grid, A, V).breakdown(U.values)


def energy_gradient(U: Field, A, V: Potential, clamp_ends: bool = True) -> np.ndarray:
    """Exact gradient of the discrete J in nodal values; zero on clamped end planes."""
    _, g = DiscreteEnergy(U.grid, A, V).value_and_gradient(U.values)
    if clamp_ends:
        g[0] = 0.0
        g[-1] = 0.0
    return g


def pde_residual(U: Field, A, V: Potential) -> np.ndarray:
    """-Lap_h U + A V'(U) at interior nodes; NaN on the axial end planes."""
    return DiscreteEnergy(U.grid, A, V).residual(U.values)


def residual_norms(residual: np.ndarray, grid: CylinderGrid) -> tuple[float, float]:
    """(max, L2) norms of a residual over the interior axial planes."""
    r = residual[1:-1]
    return float(np.max(np.abs(r))), float(np.sqrt(np.sum(grid.weights[1:-1] * r * r)))


# -- beta(tau) -----------------------------------------------------------------


def half_slab_distances(u: np.ndarray, grid: CylinderGrid) -> tuple[float, float]:
    """L2 distances of u to 1 on (-1, 0) x D and (0, 1) x D."""
    d = (np.asarray(u) - 1.0) ** 2
    return (float(np.sqrt(max(gridmod.slab_integral(d, -1, grid), 0.0))),
            float(np.sqrt(max(gridmod.slab_integral(d, 0, grid), 0.0))))


def beta_functional(u, V: Potential, grid: Optional[CylinderGrid] = None) -> float:
    """int_{-1}^{1} int_D |grad u|^2 + V(u) on a grid covering (-1, 1) x D."""
    if isinstance(u, Field):
        grid = u.grid
    _check_beta_grid(grid)
    return DiscreteEnergy(grid, 1.0, V, gradient_weight=1.0).value(_values(u))


def _check_beta_grid(grid: CylinderGrid) -> None:
    if grid is None or grid.T != 1:
        raise ValueError("the beta sub-problem needs a grid covering exactly (-1, 1) x D (T = 1)")


def _weighted_sq(e, a):
    return float(np.sum(a * e * e))


def _project_weighted_shell(z, a, r, outside: bool):
    """Euclidean projection of z onto {sum a e^2 >= r^2} (outside) or {<= r^2}.

    Stationarity gives e_i = z_i / (1 - mu a_i); mu solves the scalar equation
    sum a z^2 / (1 - mu a)^2 = r^2, monotone on the admissible interval.
    """
    from scipy.optimize import brentq

    sup = a > 0
    za = z[sup]
    aa = a[sup]

    def phi(mu):
        return float(np.sum(aa * (za / (1.0 - mu * aa)) ** 2)) - r * r

    if (phi(0.0) >= 0) == outside:
        return np.array(z, dtype=float)
    if outside:
        if not np.any(za != 0):
            za = np.full_like(za, -1e-8)
        amax = float(aa.max())
        hi = None
        for k in range(1, 60):
            cand = (1.0 - 2.0 ** -k) / amax
            if phi(cand) > 0:
                hi = cand
                break
        if hi is None:  # deviation vanishes where the weight is largest: fall back to radial scaling
            e = za * (r / np.sqrt(np.sum(aa * za * za)))
        else:
            mu = brentq(phi, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
            e = za / (1.0 - mu * aa)
    else:
        hi = 1.0 / float(aa.max())
        while phi(-hi) > 0:
            hi *= 2.0
        mu = brentq(phi, -hi, 0.0, xtol=1e-300, rtol=4 * np.finfo(float).eps)
        e = za / (1.0 - mu * aa)
    out = np.array(z, dtype=float)
    out[sup] = e
    return out


class _BetaProjection:
    """Projection onto N_tau = {d_left >= tau/2} and {d_right <= 2 tau}.

    d_left, d_right are trapezoidal L2 distances to 1 on (-1, 0) x D and
    (0, 1) x D.  Each constraint is handled by its exact Euclidean projection;
    the two share only the face x = 0, and are alternated until both hold.
    """

    def __init__(self, grid: CylinderGrid, tau: float):
        self.grid = grid
        self.r_left = 0.5 * tau * (1.0 + 1e-12)
        self.r_right = 2.0 * tau * (1.0 - 1e-12)
        m = grid.per_unit
        wl = np.zeros(grid.nx)
        wl[: m + 1] = gridmod.trapezoid_weights(m + 1, grid.h_x)
        wr = np.zeros(grid.nx)
        wr[m:] = gridmod.trapezoid_weights(m + 1, grid.h_x)
        shape = (-1,) + (1,) * grid.cross.dim
        self.a_left = wl.reshape(shape) * grid.wy
        self.a_right = wr.reshape(shape) * grid.wy

    def __call__(self, u: np.ndarray) -> np.ndarray:
        e = np.asarray(u, dtype=float) - 1.0
        for _ in range(100):
            ok_r = _weighted_sq(e, self.a_right) <= self.r_right ** 2
            ok_l = _weighted_sq(e, self.a_left) >= self.r_left ** 2
            if ok_l and ok_r:
                break
            if not ok_r:
                e = _project_weighted_shell(e, self.a_right, self.r_right, outside=False)
            if _weighted_sq(e, self.a_left) < self.r_left ** 2:
                e = _project_weighted_shell(e, self.a_left, self.r_left, outside=True)
        return 1.0 + e


@dataclass(frozen=True)
class BetaResult:
    beta: float
    infimum_estimate: float
    A_tilde: float
    tau: float
    field: Field
    distances: tuple[float, float]
    iterations: int
    converged: bool


def compute_beta(tau: float, V: Potential, A0: float, grid2: CylinderGrid, *,
                 max_iterations: int = 20000, gradient_tolerance: float = 1e-9,
                 history: int = 10, seed: Optional[np.ndarray] = None) -> BetaResult:
    """Upper estimate of beta(tau) = min(1, A0) * inf over N_tau of the beta functional.

    The minimization is projected quasi-Newton descent with the exact Euclidean
    feasibility map applied after every step; the returned value is the
    functional at a feasible field.
    """
    from .optim import projected_lbfgs

    _check_beta_grid(grid2)
    omega1 = grid2.slab_measure
    if not 0 < tau < np.sqrt(omega1):
        raise ValueError(f"tau must lie in (0, sqrt|Omega_1|) = (0, {np.sqrt(omega1):.6g}); got {tau}")
    energy = DiscreteEnergy(grid2, 1.0, V, gradient_weight=1.0)
    project = _BetaProjection(grid2, tau)
    if seed is None:
        seed = np.full(grid2.shape, 1.0 - 0.5 * tau / np.sqrt(omega1))
    u0 = project(seed)
    res = projected_lbfgs(energy.value_and_gradient, u0, project=project,
                          max_iterations=max_iterations, gradient_tolerance=gradient_tolerance,
                          history=history)
    dists = half_slab_distances(res.x, grid2)
    if dists[0] < 0.5 * tau * (1 - 1e-9) or dists[1] > 2 * tau * (1 + 1e-9):
        raise RuntimeError(f"beta minimizer left the constraint set: distances {dists}")
    a_tilde = min(1.0, float(A0))
    return BetaResult(beta=a_tilde * res.fun, infimum_estimate=res.fun, A_tilde=a_tilde, tau=tau,
                      field=Field(res.x, grid2), distances=dists, iterations=res.iterations,
                      converged=res.converged)
