"""Numerical toolkit for real and complex interpolation of weighted sequence couples."""
from .errors import (AccuracyError, InputError, InterplabError, SingularityError, SolverError,
                     UnsupportedError)
from .grid import GridFunction, TimeGrid, default_grid, sample
from .kfunctional import KOptions, k_functional, k_functional_oracle, k_values
from .mean import MeanOptions, construct_mean_representation, mean_objective, minimize_mean_norm
from .realinterp import QuadOptions, real_interp_norm, real_interp_norm_details
from .spaces import INF, BanachCouple, InterpParams, WeightedLrSpace, norm
from .strip import StripFunction, boundary_fourier, complex_norm_upper, strip_eval

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "BanachCouple", "GridFunction", "INF", "InputError", "InterpParams",
    "InterplabError", "KOptions", "MeanOptions", "QuadOptions", "SingularityError", "SolverError",
    "StripFunction", "TimeGrid", "UnsupportedError", "WeightedLrSpace", "boundary_fourier",
    "complex_norm_upper", "construct_mean_representation", "default_grid", "k_functional",
    "k_functional_oracle", "k_values", "mean_objective", "minimize_mean_norm", "norm", "real_interp_norm",
    "real_interp_norm_details", "sample", "strip_eval",
]
