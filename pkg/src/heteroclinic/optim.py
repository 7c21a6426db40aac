"""Projected limited-memory quasi-Newton descent.

Every accepted step is projected onto the feasible set and never increases the
objective.  With ``history=0`` this reduces to projected steepest descent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

log = logging.getLogger(__name__)

__all__ = ["OptimizeResult", "projected_lbfgs"]

ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 40
STALL_WINDOW = 10


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    projected_gradient_norm: float
    iterations: int
    converged: bool
    status: str
    trace: list = field(default_factory=list)  # (iteration, f, projected gradient max-norm)

    @property
    def energies(self) -> np.ndarray:
        return np.array([t[1] for t in self.trace])


def _two_loop(q: np.ndarray, S: list, Y: list, rho: list) -> np.ndarray:
    alphas = []
    for s, y, r in zip(reversed(S), reversed(Y), reversed(rho)):
        a = r * np.vdot(s, q)
        q -= a * y
        alphas.append(a)
    q *= np.vdot(S[-1], Y[-1]) / np.vdot(Y[-1], Y[-1])
    for s, y, r, a in zip(S, Y, rho, reversed(alphas)):
        b = r * np.vdot(y, q)
        q += (a - b) * s
    return q


def projected_lbfgs(
    fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    *,
    bounds: Optional[tuple[float, float]] = None,
    fixed: Optional[np.ndarray] = None,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    history: int = 10,
    step_rule: str = "armijo",
    step_size: float = 1.0,
    max_iterations: int = 10000,
    gradient_tolerance: float = 1e-8,
    stall_tolerance: float = 1e-16,
    initial_step: float = 0.1,
) -> OptimizeResult:
    """Minimize ``fun_grad`` over a box (``bounds``) or a custom feasible set (``project``).

    ``fixed`` marks variables held at their initial values.  Box variables
    sitting on a bound with the gradient pointing outward are frozen for the
    current iteration; the stopping measure is the max-norm of the resulting
    projected gradient.
    """
    if step_rule not in ("armijo", "fixed"):
        raise ValueError(f"unknown step rule {step_rule!r}")
    if bounds is not None and project is not None:
        raise ValueError("give either bounds or project, not both")
    x = np.array(x0, dtype=float)
    fixed = np.zeros(x.shape, bool) if fixed is None else np.asarray(fixed, bool)
    lo, hi = bounds if bounds is not None else (-np.inf, np.inf)
    x0_fixed = x[fixed].copy()

    def proj(z):
        if project is not None:
            z = project(z)
        elif bounds is not None:
            z = np.clip(z, lo, hi)
        z[fixed] = x0_fixed
        return z

    def stationarity(x, g):
        if project is None:
            pin = fixed | ((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0))
            pg = np.where(pin, 0.0, g)
            return pg, float(np.max(np.abs(pg), initial=0.0))
        g = np.where(fixed, 0.0, g)
        gmax = float(np.max(np.abs(g), initial=0.0))
        if gmax == 0.0:
            return g, 0.0
        s = 1e-6 / gmax
        pg = (x - proj(x - s * g)) / s
        return pg, float(np.max(np.abs(pg)))

    x = proj(x)
    f, g = fun_grad(x)
    if not np.isfinite(f):
        raise FloatingPointError(f"objective is not finite at the starting point (f = {f})")
    S: list = []
    Y: list = []
    rho: list = []
    pg, pgn = stationarity(x, g)
    trace = [(0, f, pgn)]
    status = "max_iterations"
    it = 0
    while True:
        if pgn <= gradient_tolerance:
            status = "gradient_tolerance"
            break
        if it >= max_iterations:
            break
        if step_rule == "fixed":
            xn = proj(x - step_size * pg)
            fn, gn = fun_grad(xn)
            if not fn <= f:
                status = "divergence"
                log.warning("fixed step increased the objective (%.17g -> %.17g)", f, fn)
                break
        else:
            accepted = False
            for attempt in range(2):
                use_memory = history > 0 and S and attempt == 0
                d = -_two_loop(pg.copy(), S, Y, rho) if use_memory else -pg
                if project is None:
                    d[pg == 0.0] = 0.0
                if not np.vdot(d, pg) < 0:
                    d = -pg
                if not S:
                    d *= initial_step / max(float(np.max(np.abs(d))), 1e-300)
                t = 1.0
                for _ in range(MAX_BACKTRACKS):
                    xn = proj(x + t * d)
                    fn, gn = fun_grad(xn)
                    slope = np.vdot(g, xn - x)
                    if np.isfinite(fn) and slope < 0 and fn <= f + ARMIJO_C1 * slope:
                        accepted = True
                        break
                    # below the roundoff floor of f: accept non-increase with reduced slope
                    if np.isfinite(fn) and slope < 0 and fn <= f and np.vdot(gn, xn - x) <= 0.9 * abs(slope):
                        accepted = True
                        break
                    t *= 0.5
                if accepted:
                    break
                S.clear(), Y.clear(), rho.clear()
            if not accepted:
                status = "line_search"
                break
        it += 1
        s = xn - x
        y = gn - g
        sy = float(np.vdot(s, y))
        if history > 0 and sy > 1e-12 * float(np.vdot(y, y)) and sy > 0:
            S.append(s)
            Y.append(y)
            rho.append(1.0 / sy)
            if len(S) > history:
                S.pop(0), Y.pop(0), rho.pop(0)
        x, f, g = xn, fn, gn
        pg, pgn = stationarity(x, g)
        trace.append((it, f, pgn))
        if it >= STALL_WINDOW:
            f_old = trace[-1 - STALL_WINDOW][1]
            if f_old - f <= stall_tolerance * max(1.0, abs(f)) and pgn > gradient_tolerance:
                status = "stall"
                break
    converged = pgn <= gradient_tolerance
    log.debug("projected_lbfgs: %s after %d iterations, f = %.17g, |pg| = %.3e", status, it, f, pgn)
    return OptimizeResult(x=x, fun=float(f), grad=g, projected_gradient_norm=pgn, iterations=it,
                          converged=converged, status=status, trace=trace)
