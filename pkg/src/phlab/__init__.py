"""Numerical laboratory for the products f = A x R_alpha and g = f x h.

A is a hyperbolic toral automorphism, R_alpha an irrational circle rotation
and h a Morse-Smale circle diffeomorphism with ell sinks.
"""

__version__ = "0.1.0"

from .core import (AngleSpec, CatMap, MorseSmaleMap, ProductSystem, SystemPoint,
                   analytic_lyapunov_spectrum, cat_apply, ms_apply, ms_fixed_points,
                   partial_hyperbolicity_certificate, rotation_apply, system_orbit, system_step)
from .fixedpoint import TorusCoord
from .kernels import BACKEND
from .lattice import (FrequencyIndex, ergodicity_certificate, escape_certificate,
                      independence_falsifier, index_step, rotation_margin)
from .stats import (Character, TrigPolynomial, basin_survey, birkhoff_average, classify_basin,
                    empirical_measure, lyapunov_estimate, sandwich_check, transitivity_probe,
                    uniformity_deviation, weyl_sums)
