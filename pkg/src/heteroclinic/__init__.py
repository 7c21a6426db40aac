"""Heteroclinic solutions of -Lap u + A(eps x, y) V'(u) = 0 on a cylinder by energy minimization."""

from .energy import (DiscreteEnergy, EnergyBreakdown, Field, beta_functional, compute_beta,
                     energy_gradient, lagrangian, pde_residual, residual_norms, total_energy)
from .gamma import clip, glue, normalization_shifts, seed_phi, tail_norms, translate
from .grid import CrossSection, CylinderGrid, build_grid, gradient_sq, integrate, laplacian, slab_integral
from .model import (CoefficientField, Potential, constant, ginzburg_landau, make_class1, make_class2,
                    periodic_cosine, sample_on_grid, validate_potential)
from .solve import SolveConfig, SolveReport, closed_form_level, compare_levels, minimize, sweep_epsilon

__version__ = "0.1.0"
