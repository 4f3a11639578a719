"""Space-time Galerkin BEM for the 2D heat equation with adaptive refinement."""

from .geometry import Domain, BoundaryCurve, unit_square, l_shape, build_triangulation
from .mesh import (
    SpaceTimeMesh,
    initial_mesh,
    uniform_refine,
    refine_isotropic,
    refine_anisotropic,
    refine_parabolic,
)
from .quadrature import QuadRule, gauss_legendre, gauss_log, gauss_inv_sqrt
from .kernel import expint_ei, heat_G, frak_g, frak_G
from .assembly import ProblemSpec, GalerkinSystem, assemble_system, QuadConfig
from .solver import Density, solve_galerkin, hh2_estimate
from .residual import ResidualEvaluator
from .estimator import IndicatorSet, compute_indicators
from .adaptive import AdaptiveConfig, ConvergenceRecord, run_adaptive, mark, fit_rate
from .cli import problem_catalog

__all__ = [
    "Domain", "BoundaryCurve", "unit_square", "l_shape", "build_triangulation",
    "SpaceTimeMesh", "initial_mesh", "uniform_refine", "refine_isotropic",
    "refine_anisotropic", "refine_parabolic",
    "QuadRule", "gauss_legendre", "gauss_log", "gauss_inv_sqrt",
    "expint_ei", "heat_G", "frak_g", "frak_G",
    "ProblemSpec", "GalerkinSystem", "assemble_system", "QuadConfig",
    "Density", "solve_galerkin", "hh2_estimate",
    "ResidualEvaluator", "IndicatorSet", "compute_indicators",
    "AdaptiveConfig", "ConvergenceRecord", "run_adaptive", "mark", "fit_rate",
    "problem_catalog",
]

__version__ = "0.1.0"
