"""Weighted perimeters, capacities and prescribed-curvature sets on grids.

The weight is anchored at the origin: derivatives carry the term
``sqrt(alpha - 1) x_k |x|^((alpha - 2)/2)``, so perimeters pick up an
``|x|^(alpha/2)`` volume penalty on top of the jump part.
"""
from .capacity import (
    CapacityResult,
    IsocapacityReport,
    capacity_axiom_suite,
    capacity_relaxed,
    capacity_set_based,
    isocapacity_check,
    isocapacity_sets,
    sobolev_1_capacity,
    trace_check,
)
from .config import ExperimentConfig
from .core import *  # noqa: F401,F403
from .curvature import CurvatureRun, build_curvature, lambda_sweep, massari_value, verify_minimality
from .graphcut import CutGraph, CutSolution, build_energy, min_cut, parametric_sweep
from .perimeter import (
    PerimeterValue,
    complement_growth,
    perimeter_indicator,
    perimeter_shape,
    restricted_perimeter,
    scaling_sweep,
    submodularity_check,
)
from .variation import (
    GradientOperator,
    VariationReport,
    coarea_integral,
    divergence,
    hermite_gradient,
    total_variation_dual,
    variation_sup,
)

__version__ = "0.1.0"
