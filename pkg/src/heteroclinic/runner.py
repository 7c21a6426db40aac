"""Experiment dispatch: config -> computations -> artifacts + exit status."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gamma
from .config import SCHEMA_VERSION, ExperimentConfig
from .energy import DiscreteEnergy, compute_beta, residual_norms
from .io import version_string, write_field_csv, write_summary, write_trace_csv
from .model import (CoefficientField, constant, exponential_gap, gaussian_gap, gaussian_well, ginzburg_landau,
                    make_class1, make_class2, periodic_cosine, polynomial_potential, sample_on_grid,
                    certify_coefficient, validate_potential)
from .grid import CrossSection
from .solve import SolveConfig, SolveReport, closed_form_level, compare_levels, minimize, sweep_epsilon

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ASSERTION = 4


@dataclass
class RunResult:
    summary: dict
    artifacts: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return self.summary["exit_code"]


def build_potential(cfg: ExperimentConfig):
    if cfg.potential.name == "polynomial":
        return polynomial_potential(cfg.potential.coefficients)
    return ginzburg_landau()


def build_coefficient(cfg: ExperimentConfig) -> CoefficientField:
    c = cfg.coefficient
    cross = CrossSection(tuple(cfg.grid.cross.extents), tuple(cfg.grid.cross.nodes))
    if c.kind == "constant":
        return constant(c.value)
    if c.kind == "periodic":
        return periodic_cosine(c.a, c.b)
    if c.kind == "class1":
        gap = (gaussian_gap if c.gap == "gaussian" else exponential_gap)(c.gap_amplitude, c.gap_width)
        return make_class1(periodic_cosine(c.a, c.b), gap, cross=cross)
    return make_class2(gaussian_well(c.a0, c.a_inf, c.width), c.epsilon, cross=cross)


def solve_config(cfg: ExperimentConfig) -> SolveConfig:
    s = cfg.solve
    return SolveConfig(max_iterations=s.max_iterations, gradient_tolerance=s.gradient_tolerance,
                       energy_stall_tolerance=s.energy_stall_tolerance, step_rule=s.step_rule,
                       step_size=s.step_size, history=s.history,
                       seed_choice="phi" if s.seed.kind == "phi" else "custom", seed_j=s.seed.j)


def _seed(cfg: ExperimentConfig, grid):
    if cfg.solve.seed.kind == "custom":
        from .io import read_field_csv
        return read_field_csv(cfg.solve.seed.path, grid)
    return None


def _invariant_checks(rep: SolveReport, cfg: ExperimentConfig, prefix: str = "") -> dict:
    E = np.array([t[1] for t in rep.trace])
    u = rep.minimizer.values
    tails = rep.tails
    return {
        f"{prefix}energy_nonincreasing": bool(np.all(np.diff(E) <= 0)),
        f"{prefix}bounds_and_clamps": bool(np.all(np.abs(u) <= 1) and np.all(u[0] == 1) and np.all(u[-1] == -1)),
        f"{prefix}end_tails": bool(tails[0].left_norm <= cfg.checks.tail_tolerance
                                  and tails[-1].right_norm <= cfg.checks.tail_tolerance),
    }


class _Writer:
    def __init__(self, cfg: ExperimentConfig):
        self.dir = Path(cfg.output.dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.suffix = ".csv.gz" if cfg.output.gzip else ".csv"
        self.files: list[str] = []

    def field(self, name, U, residual, A):
        p = self.dir / f"{name}{self.suffix}"
        write_field_csv(p, U, residual, A)
        self.files.append(p.name)

    def trace(self, name, trace):
        p = self.dir / f"{name}{self.suffix}"
        write_trace_csv(p, trace)
        self.files.append(p.name)

    def report(self, name, rep: SolveReport, A):
        self.field(f"field_{name}" if name else "field", rep.minimizer, rep.residual, A)
        self.trace(f"trace_{name}" if name else "trace", rep.trace)


def run_validate(cfg, V, A, grid, w):
    pot = validate_potential(V, cfg.validate_.samples)
    coef = certify_coefficient(A, grid)
    results = {"potential": pot.to_dict(), "coefficient": coef.to_dict()}
    checks = {f"potential_{c.name}": c.passed for c in pot.checks}
    checks.update({f"coefficient_{c.name}": c.passed for c in coef.checks})
    return results, checks, True


def run_minimize(cfg, V, A, grid, w):
    rep = minimize(A, V, grid, solve_config(cfg), seed=_seed(cfg, grid))
    w.report("", rep, sample_on_grid(A, grid))
    results = rep.summary()
    checks = _invariant_checks(rep, cfg)
    checks["residual_bound"] = rep.residual_max <= 10 * cfg.solve.gradient_tolerance / float(grid.weights.min())
    if A.params.get("value") is not None and cfg.potential.name == "ginzburg_landau":
        ref = closed_form_level(A.params["value"], grid.cross.measure)
        results["closed_form_level"] = ref
        results["closed_form_relative_error"] = (rep.theta_estimate - ref) / ref
        checks["closed_form_level"] = abs(rep.theta_estimate - ref) <= cfg.checks.closed_form_rtol * ref
        checks["equipartition"] = abs(rep.equipartition_ratio - 1.0) <= cfg.checks.equipartition_tol
    return results, checks, rep.converged


def run_compare(cfg, V, A, grid, w):
    if A.class_tag.value != "class1":
        raise _ConfigProblem("compare-levels needs coefficient.kind = class1")
    cmp = compare_levels(A, V, grid, solve_config(cfg), gap_threshold=cfg.checks.gap_threshold)
    w.report("A", cmp.report, sample_on_grid(A, grid))
    w.report("Ap", cmp.report_p, sample_on_grid(A.companion, grid))
    checks = {k: v for k, v in cmp.checks.items() if k != "converged"}
    checks.update(_invariant_checks(cmp.report, cfg, "A_"))
    checks.update(_invariant_checks(cmp.report_p, cfg, "Ap_"))
    return cmp.summary(), checks, cmp.checks["converged"]


def run_sweep(cfg, V, A, grid, w):
    if A.class_tag.value != "class2":
        raise _ConfigProblem("sweep-eps needs coefficient.kind = class2")
    table = sweep_epsilon(A, V, grid, cfg.coefficient.eps_list, solve_config(cfg),
                          warm_start=cfg.solve.warm_start)
    w.report("theta0", table.theta_0, sample_on_grid(A.with_epsilon(0.0), grid))
    w.report("thetainf", table.theta_inf, np.full(grid.shape, A.A_infinity))
    for i, row in enumerate(table.rows):
        w.report(f"eps{i}", row.report, sample_on_grid(A.with_epsilon(row.epsilon), grid))
    results = table.summary()
    checks = {k: v for k, v in table.checks.items() if k != "converged"}
    if cfg.potential.name == "ginzburg_landau":
        ref0 = closed_form_level(A.A0, grid.cross.measure)
        refinf = closed_form_level(A.A_infinity, grid.cross.measure)
        results["closed_form"] = {"theta_0": ref0, "theta_inf": refinf}
        checks["theta0_closed_form"] = abs(table.theta_0.theta_estimate - ref0) <= cfg.checks.level_rtol * ref0
        checks["thetainf_closed_form"] = abs(table.theta_inf.theta_estimate - refinf) <= cfg.checks.level_rtol * refinf
    for r in [table.theta_0, table.theta_inf] + [row.report for row in table.rows]:
        for k, v in _invariant_checks(r, cfg).items():
            checks[k] = checks.get(k, True) and v
    return results, checks, table.checks["converged"]


def run_beta(cfg, V, A, grid, w):
    g2 = cfg.beta.grid.build()
    tau = cfg.tau if cfg.tau is not None else gamma.default_tau(g2)
    res = compute_beta(tau, V, cfg.beta.A0, g2, max_iterations=cfg.beta.max_iterations,
                       gradient_tolerance=cfg.beta.gradient_tolerance, history=cfg.solve.history)
    E = DiscreteEnergy(g2, 1.0, V, gradient_weight=1.0)
    r = E.residual(res.field.values)
    w.field("field_beta", res.field, r, np.full(g2.shape, res.A_tilde))
    results = {"tau": tau, "beta": res.beta, "infimum_estimate": res.infimum_estimate, "A_tilde": res.A_tilde,
               "distance_left": res.distances[0], "distance_right": res.distances[1],
               "iterations": res.iterations, "converged": res.converged,
               "residual_max": residual_norms(r, g2)[0]}
    checks = {"beta_positive": res.beta > 0,
              "feasible": res.distances[0] >= 0.5 * tau * (1 - 1e-9) and res.distances[1] <= 2 * tau * (1 + 1e-9)}
    return results, checks, res.converged


class _ConfigProblem(Exception):
    pass


RUNNERS = {
    "validate": run_validate,
    "minimize": run_minimize,
    "compare-levels": run_compare,
    "sweep-eps": run_sweep,
    "beta": run_beta,
}


def run(cfg: ExperimentConfig) -> RunResult:
    """Run the configured experiment, write artifacts, return the summary with its exit code."""
    from .model import ModelError

    try:
        V = build_potential(cfg)
        A = build_coefficient(cfg)
    except ModelError as exc:
        return RunResult(_summary(cfg, {"error": str(exc)}, {}, False, EXIT_CONFIG))
    grid = cfg.grid.build()
    w = _Writer(cfg)
    try:
        results, checks, converged = RUNNERS[cfg.kind](cfg, V, A, grid, w)
    except _ConfigProblem as exc:
        return RunResult(_summary(cfg, {"error": str(exc)}, {}, False, EXIT_CONFIG))
    checks = {k: bool(v) for k, v in checks.items()}
    if not converged:
        code = EXIT_SOLVER
    elif not all(checks.values()):
        code = EXIT_ASSERTION
    else:
        code = EXIT_OK
    summary = _summary(cfg, results, checks, converged, code)
    summary["artifacts"] = list(w.files) + ["summary.json"]
    write_summary(w.dir / "summary.json", summary)
    return RunResult(summary, summary["artifacts"])


def _summary(cfg, results, checks, converged, code) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "version": version_string(),
        "kind": cfg.kind,
        "config": cfg.resolved(),
        "results": results,
        "checks": checks,
        "converged": bool(converged),
        "passed": bool(converged and all(checks.values())),
        "exit_code": code,
    }
