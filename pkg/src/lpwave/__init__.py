"""Discontinuity-preserving L^p integration of 2-D gradient fields."""

__version__ = "0.1.0"

from .assembly import SparseSystem, apply, assemble
from .grid import (GradientField, Grid, GridMismatchError, ScalarField, forward_diff_x,
                   forward_diff_y, gradient, mean_align)
from .irls import (IntegrationBreakdown, IntegrationParams, SolveReport, integrate,
                   integrate_least_squares)
from .pcg import (PcgParams, PcgResult, Preconditioner, PreconditionerBreakdown, SolverBreakdown,
                  build_ilu0, pcg_solve)
from .synthetic import (FringeSpec, SyntheticSpec, add_noise, gradient_of, peaks_wavefront,
                        q_error, render_fringe, synthetic_case)
from .weights import WeightParams, compute_weights

__all__ = [
    "Grid", "ScalarField", "GradientField", "GridMismatchError",
    "forward_diff_x", "forward_diff_y", "gradient", "mean_align",
    "WeightParams", "compute_weights",
    "SparseSystem", "assemble", "apply",
    "PcgParams", "PcgResult", "Preconditioner", "PreconditionerBreakdown", "SolverBreakdown",
    "build_ilu0", "pcg_solve",
    "IntegrationParams", "SolveReport", "IntegrationBreakdown", "integrate", "integrate_least_squares",
    "SyntheticSpec", "FringeSpec", "peaks_wavefront", "gradient_of", "add_noise", "q_error",
    "render_fringe", "synthetic_case",
]
