"""
Numerical helpers shared by the stationary-law modules
"""

from .estimators import (
    MonteCarloEstimate,
    batch_means_standard_error,
    effective_sample_size,
    mc_laplace_marginal,
    mc_laplace_pair,
    mean_estimate,
)
from .quadrature import QuadratureResult, TanhSinhQuadrature

__all__ = [
    'MonteCarloEstimate',
    'QuadratureResult',
    'TanhSinhQuadrature',
    'batch_means_standard_error',
    'effective_sample_size',
    'mc_laplace_marginal',
    'mc_laplace_pair',
    'mean_estimate',
]
