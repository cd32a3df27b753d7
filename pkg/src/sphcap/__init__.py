"""Cap-mass statistics of random spherical harmonics.

A random degree-m harmonic has iid Gaussian coefficients over an
orthonormal basis. This package computes the normalized mass X_z of phi^2
on small caps, its exact lambda-spectrum, Chernoff tail bounds and the
global discrepancy sup_z |X_z - 1/(4 pi)| over covering nets.
"""
__version__ = "0.1.0"

from .capmass import (MEAN_X, CapQuadrature, CapSpec, LambdaSpectrum, MCEstimate, RegimeError, cap_average,
                      cap_average_batch, covariance_mc, lambda_asymptotic, lambda_asymptotic_spectrum, lambda_bessel,
                      lambda_quadrature, metric_squared, sample_x, trace_power, triple_trace_mc, variance_asymptotic,
                      variance_from_spectrum)
from .discrepancy import (DiscrepancyRun, SphereNet, build_net, discrepancy_estimate, run_discrepancy,
                          sup_norm_estimate, symmetric_difference_fraction, tail_probability_experiment)
from .ensemble import HarmonicCoefficients, basis_matrix, evaluate_field, kernel, sample_coefficients
from .geometry import NORTH, Direction, cap_volume
from .rng import Seed
from .specfun import (assoc_legendre_norm, bessel_j, bessel_moment, bernstein_bound, hilb_approx, legendre,
                      normalized_basis_value)
from .tailbounds import TailReport, chernoff_lower, chernoff_upper, optimal_tilt, tilt_s1, tilt_s2
