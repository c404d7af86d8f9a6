"""Local Fourier analysis and periodic multigrid for discretized Stokes equations."""

from .lfa import TwoGridSpec, optimize_params, smoothing_factor, theorem_optima, two_grid_factor
from .mgsolver import CycleSpec, cost_model, measure_rho_hat
from .relaxation import RelaxScheme, smoother_symbol
from .symbols import Discretization, system_symbol

__all__ = [
    "CycleSpec",
    "Discretization",
    "RelaxScheme",
    "TwoGridSpec",
    "cost_model",
    "measure_rho_hat",
    "optimize_params",
    "smoother_symbol",
    "smoothing_factor",
    "system_symbol",
    "theorem_optima",
    "two_grid_factor",
]
