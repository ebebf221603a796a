"""Pathwise numerics for fractional stochastic delay equations.

Sampling of fractional Brownian motion, Hoelder and Weyl-type norms,
Young integrals via fractional derivatives, a Picard solver for delay
equations driven by fBm with H > 1/2, and numerical checks of the random
dynamical system they generate.
"""

from .cocycle import (
    CocycleEvaluator,
    CocycleReport,
    cocycle_evaluate,
    cocycle_residual,
    continuity_modulus_check,
    remark1_counterexample,
)
from .config import ParseError, parse_system_file
from .fbm import SamplePath, fbm_covariance, sample_fbm, wiener_shift
from .fractional import IntegralMethod, cross_validate, frac_deriv_left, frac_deriv_right, young_integral
from .grid import GridAlignmentError, GridFunction, PathGrid
from .holder import holder_norm, holder_seminorm, lambda_norm, little_holder_diagnostic, sup_norm, windowed_seminorm
from .sdde import CoefficientFunctional, DelaySystem, Segment, Solution, SolverConfig, SolverError, solve

__all__ = [
    "CocycleEvaluator",
    "CocycleReport",
    "CoefficientFunctional",
    "DelaySystem",
    "GridAlignmentError",
    "GridFunction",
    "IntegralMethod",
    "ParseError",
    "PathGrid",
    "SamplePath",
    "Segment",
    "Solution",
    "SolverConfig",
    "SolverError",
    "cocycle_evaluate",
    "cocycle_residual",
    "continuity_modulus_check",
    "cross_validate",
    "fbm_covariance",
    "frac_deriv_left",
    "frac_deriv_right",
    "holder_norm",
    "holder_seminorm",
    "lambda_norm",
    "little_holder_diagnostic",
    "parse_system_file",
    "remark1_counterexample",
    "sample_fbm",
    "solve",
    "sup_norm",
    "wiener_shift",
    "windowed_seminorm",
    "young_integral",
]
