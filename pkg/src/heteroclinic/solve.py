"""Minimization of the truncated renormalized energy and level estimates.

End planes are clamped to +1 (x = -T) and -1 (x = T), which keeps every
iterate inside the admissible class; each reported level is the energy of a
feasible field and therefore an upper bound for the discrete infimum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from . import gamma
from .energy import DiscreteEnergy, EnergyBreakdown, Field, residual_norms
from .grid import CylinderGrid
from .model import CoefficientClass, CoefficientField, Potential, constant, sample_on_grid
from .optim import projected_lbfgs

log = logging.getLogger(__name__)

__all__ = [
    "SolveConfig",
    "SolveReport",
    "SolverError",
    "minimize",
    "closed_form_level",
    "LevelComparison",
    "compare_levels",
    "estimate_levels",
    "SweepRow",
    "SweepTable",
    "sweep_epsilon",
]

Coefficient = Union[CoefficientField, np.ndarray, float]


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    max_iterations: int = 20000
    gradient_tolerance: float = 1e-8
    energy_stall_tolerance: float = 1e-16
    step_rule: str = "armijo"
    step_size: float = 1.0
    history: int = 10
    seed_choice: str = "phi"   # phi | custom | previous
    seed_j: int = 0

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if not (self.gradient_tolerance > 0 and self.energy_stall_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if self.step_rule not in ("armijo", "fixed"):
            raise ValueError(f"step_rule must be 'armijo' or 'fixed', got {self.step_rule!r}")
        if self.history < 0:
            raise ValueError("history must be nonnegative")
        if self.seed_choice not in ("phi", "custom", "previous"):
            raise ValueError(f"unknown seed choice {self.seed_choice!r}")


@dataclass
class SolveReport:
    minimizer: Field
    theta_estimate: float
    breakdown: EnergyBreakdown
    iterations: int
    projected_gradient_norm: float
    residual_max: float
    residual_l2: float
    tails: list
    tail_sup: list
    equipartition_ratio: float
    zero_crossing: Optional[float]
    converged: bool
    status: str
    residual: Optional[np.ndarray] = field(repr=False, default=None)
    trace: list = field(repr=False, default_factory=list)

    def summary(self) -> dict:
        return {
            "theta": self.theta_estimate,
            "dirichlet_part": self.breakdown.dirichlet_part,
            "potential_part": self.breakdown.potential_part,
            "equipartition_ratio": self.equipartition_ratio,
            "iterations": self.iterations,
            "projected_gradient_norm": self.projected_gradient_norm,
            "residual_max": self.residual_max,
            "residual_l2": self.residual_l2,
            "zero_crossing": self.zero_crossing,
            "converged": self.converged,
            "status": self.status,
            "per_slab": [float(v) for v in self.breakdown.per_slab],
            "tail_norms": [[t.k, t.left_norm, t.right_norm] for t in self.tails],
        }


def _sampled(A: Coefficient, grid: CylinderGrid) -> np.ndarray:
    if isinstance(A, CoefficientField):
        return sample_on_grid(A, grid)
    return np.broadcast_to(np.asarray(A, dtype=float), grid.shape)


def _clamped(u: np.ndarray) -> np.ndarray:
    u = np.clip(np.array(u, dtype=float), -1.0, 1.0)
    u[0] = 1.0
    u[-1] = -1.0
    return u


def minimize(A: Coefficient, V: Potential, grid: CylinderGrid, cfg: SolveConfig = SolveConfig(),
             seed: Optional[Field] = None) -> SolveReport:
    """Projected descent on the clamped, clipped discrete energy.

    ``seed`` is required for the custom/previous seed choices; otherwise the
    piecewise-affine seed with transition on (seed_j, seed_j + 1) is used.
    """
    a = _sampled(A, grid)
    if seed is None:
        if cfg.seed_choice != "phi":
            raise ValueError(f"seed choice {cfg.seed_choice!r} needs an explicit seed field")
        seed = gamma.seed_phi(cfg.seed_j, grid)
    elif seed.grid != grid:
        raise ValueError("seed field lives on a different grid")
    energy = DiscreteEnergy(grid, a, V)
    u0 = _clamped(seed.values)
    fixed = np.zeros(grid.shape, bool)
    fixed[0] = fixed[-1] = True
    f0 = energy.value(u0)
    if not np.isfinite(f0):
        raise SolverError(f"energy is not finite at the seed (J = {f0})")
    res = projected_lbfgs(energy.value_and_gradient, u0, bounds=(-1.0, 1.0), fixed=fixed,
                          history=cfg.history, step_rule=cfg.step_rule, step_size=cfg.step_size,
                          max_iterations=cfg.max_iterations, gradient_tolerance=cfg.gradient_tolerance,
                          stall_tolerance=cfg.energy_stall_tolerance)
    if res.status == "divergence":
        log.warning("minimize: energy increased under the fixed step rule; reporting last accepted iterate")
    U = Field(res.x, grid)
    bd = energy.breakdown(res.x)
    r = energy.residual(res.x)
    rmax, rl2 = residual_norms(r, grid)
    report = SolveReport(
        minimizer=U, theta_estimate=bd.total, breakdown=bd, iterations=res.iterations,
        projected_gradient_norm=res.projected_gradient_norm, residual_max=rmax, residual_l2=rl2,
        tails=gamma.tail_norms(U), tail_sup=gamma.tail_sup(U), equipartition_ratio=bd.equipartition_ratio,
        zero_crossing=U.zero_crossing(), converged=res.converged, status=res.status,
        residual=r, trace=res.trace,
    )
    return report


def closed_form_level(A: float, cross_measure: float = 1.0) -> float:
    """Energy of the 1D Ginzburg-Landau heteroclinic -tanh(sqrt(2A) x), times |D|."""
    return 4.0 / 3.0 * np.sqrt(2.0 * A) * cross_measure


def estimate_levels(problems: dict, V: Potential, grid: CylinderGrid, cfg: SolveConfig = SolveConfig(),
                    seeds: Optional[dict] = None) -> dict[str, SolveReport]:
    """Minimize each named coefficient on one shared grid, potential and config."""
    seeds = seeds or {}
    out = {}
    for name, A in problems.items():
        if isinstance(A, np.ndarray) and A.shape not in ((), grid.shape):
            raise ValueError(f"coefficient {name!r} sampled on a different grid")
        out[name] = minimize(A, V, grid, cfg, seed=seeds.get(name))
    return out


@dataclass
class LevelComparison:
    theta: float          # level for A
    theta_p: float        # level for the periodic companion A_p
    J_A_of_Up: float      # J_A(U*_p)
    J_Ap_of_U: float      # J_{A_p}(U*)
    gap: float            # J_{A_p}(U*_p) - J_A(U*_p) = sum W (A_p - A) V(U*_p)
    report: SolveReport
    report_p: SolveReport
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def summary(self) -> dict:
        return {"theta_A": self.theta, "theta_Ap": self.theta_p, "J_A_of_Up": self.J_A_of_Up,
                "J_Ap_of_U": self.J_Ap_of_U, "gap": self.gap,
                "checks": {k: bool(v) for k, v in self.checks.items()},
                "A": self.report.summary(), "Ap": self.report_p.summary()}


def compare_levels(A: CoefficientField, V: Potential, grid: CylinderGrid, cfg: SolveConfig = SolveConfig(),
                   gap_threshold: float = 0.0) -> LevelComparison:
    """Levels for a Class 1 field and its periodic companion, with exact cross-evaluations."""
    if A.class_tag is not CoefficientClass.CLASS1 or A.companion is None:
        raise ValueError("compare_levels needs a Class 1 field with a periodic companion")
    a = sample_on_grid(A, grid)
    ap = sample_on_grid(A.companion, grid)
    reps = estimate_levels({"A": a, "Ap": ap}, V, grid, cfg)
    rep, rep_p = reps["A"], reps["Ap"]
    EA = DiscreteEnergy(grid, a, V)
    EAp = DiscreteEnergy(grid, ap, V)
    J_A_Up = EA.breakdown(rep_p.minimizer.values).total
    J_Ap_U = EAp.breakdown(rep.minimizer.values).total
    up = rep_p.minimizer.values
    gap = float(np.sum(grid.weights * (ap - a) * V.value(up)))
    checks = {
        "theta_A_lt_theta_Ap": rep.theta_estimate < rep_p.theta_estimate,
        "cross_bound_strict": J_A_Up < rep_p.theta_estimate,
        "cross_eval_monotone_U": rep.theta_estimate <= J_Ap_U,
        "cross_eval_monotone_Up": J_A_Up <= rep_p.theta_estimate,
        "gap_positive": gap > gap_threshold,
        "converged": rep.converged and rep_p.converged,
    }
    return LevelComparison(rep.theta_estimate, rep_p.theta_estimate, J_A_Up, J_Ap_U, gap, rep, rep_p, checks)


@dataclass
class SweepRow:
    epsilon: float
    theta: float
    J_eps_W0: float
    converged: bool
    iterations: int
    zero_crossing: Optional[float]
    report: SolveReport = field(repr=False)


@dataclass
class SweepTable:
    rows: list
    theta_0: SolveReport
    theta_inf: SolveReport
    epsilon_0: Optional[float]
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def summary(self) -> dict:
        return {
            "theta_0": self.theta_0.theta_estimate,
            "theta_inf": self.theta_inf.theta_estimate,
            "epsilon_0": self.epsilon_0,
            "rows": [{"epsilon": r.epsilon, "theta": r.theta, "J_eps_W0": r.J_eps_W0,
                      "converged": r.converged, "iterations": r.iterations,
                      "zero_crossing": r.zero_crossing} for r in self.rows],
            "reference": {"theta_0": self.theta_0.summary(), "theta_inf": self.theta_inf.summary()},
            "checks": {k: bool(v) for k, v in self.checks.items()},
        }


def sweep_epsilon(A: CoefficientField, V: Potential, grid: CylinderGrid, eps_list,
                  cfg: SolveConfig = SolveConfig(), warm_start: bool = True,
                  slack: float = 1e-8) -> SweepTable:
    """Levels Theta_eps along a descending list with warm starts, plus Theta_0 and Theta_inf.

    Theta_0 freezes the coefficient at A(0, y); Theta_inf uses the constant A_infinity.
    """
    if A.class_tag is not CoefficientClass.CLASS2:
        raise ValueError("sweep_epsilon needs a Class 2 field")
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])) or any(e <= 0 for e in eps_list):
        raise ValueError(f"eps_list must be positive and strictly descending, got {eps_list}")
    rep0 = minimize(A.with_epsilon(0.0), V, grid, cfg)
    rep_inf = minimize(constant(A.A_infinity), V, grid, cfg)
    W0 = rep0.minimizer.values
    rows = []
    prev = None
    for eps in eps_list:
        Ae = A.with_epsilon(eps)
        seed = prev if (warm_start and prev is not None) else None
        run_cfg = replace(cfg, seed_choice="previous") if seed is not None else cfg
        rep = minimize(Ae, V, grid, run_cfg, seed=seed)
        J_W0 = DiscreteEnergy(grid, sample_on_grid(Ae, grid), V).breakdown(W0).total
        rows.append(SweepRow(eps, rep.theta_estimate, J_W0, rep.converged, rep.iterations,
                             rep.zero_crossing, rep))
        if not rep.converged:
            log.warning("sweep_epsilon: inner solve at eps = %g did not converge (%s)", eps, rep.status)
        prev = rep.minimizer
    th0, thinf = rep0.theta_estimate, rep_inf.theta_estimate
    below = [r.theta < thinf for r in rows]
    # largest listed eps such that it and every smaller listed eps satisfy Theta_eps < Theta_inf
    eps0 = None
    for r, ok in zip(reversed(rows), reversed(below)):
        if not ok:
            break
        eps0 = r.epsilon
    excess = [r.J_eps_W0 - th0 for r in rows]
    checks = {
        "theta0_lt_thetainf": th0 < thinf,
        "theta_eps_le_J_eps_W0": all(r.theta <= r.J_eps_W0 for r in rows),
        "theta_eps_ge_theta0": all(r.theta >= th0 - slack for r in rows),
        "J_eps_W0_excess_decreasing": all(b < a for a, b in zip(excess, excess[1:])),
        "smallest_two_below_thetainf": len(rows) >= 2 and all(below[-2:]),
        "converged": rep0.converged and rep_inf.converged and all(r.converged for r in rows),
    }
    return SweepTable(rows, rep0, rep_inf, eps0, checks)
