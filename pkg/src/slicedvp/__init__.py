"""Gaussian-smoothed sliced Wasserstein distance, its measure derivatives,
and a finite Borwein-Preiss variational solver built on it."""

__version__ = "0.1.0"

from .calculus import (check_first_bound, check_second_bound, grad_measure,
                       hess_x_measure, ibp_identity_residual)
from .gauge import (GaugeParams, SearchSpace, bp_solve, phi_delta,
                    phi_derivative_bounds, rho_sigma, verify_conclusions)
from .measure import (DiscreteMeasure, Direction, SmoothingLevel, TimedMeasure,
                      project, second_moment, smoothed_second_moment)
from .quadrature import GaussRule, LatticeRule, gauss_rule
from .sliced import CONVENTION, sw2_sigma_squared, sw2_squared, w2_squared_exact
from .sphere import build_rule, kappa, second_moment_matrix
from .univariate import (GaussianMixture1D, TransportMap1D, cdf, quantile,
                         transport, transport_derivative, w2_squared_1d)

__all__ = [
    "CONVENTION", "Direction", "DiscreteMeasure", "GaugeParams",
    "GaussRule", "GaussianMixture1D", "LatticeRule", "SearchSpace",
    "SmoothingLevel", "TimedMeasure", "TransportMap1D", "bp_solve",
    "build_rule", "cdf", "check_first_bound", "check_second_bound",
    "gauss_rule", "grad_measure", "hess_x_measure", "ibp_identity_residual",
    "kappa", "phi_delta", "phi_derivative_bounds", "project", "quantile",
    "rho_sigma", "second_moment", "second_moment_matrix",
    "smoothed_second_moment", "sw2_sigma_squared", "sw2_squared",
    "transport", "transport_derivative", "verify_conclusions",
    "w2_squared_1d", "w2_squared_exact",
]
