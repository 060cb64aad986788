"""
Stationary laws of the rank-based particle system and of its mean-field limit
"""

from .finite_stationary import (
    EpsilonDeltaPlan,
    FeasibilityCertificate,
    FiniteLaw,
    f_minus,
    f_plus,
    feasibility,
    laplace_I,
    laplace_I_all,
    laplace_J,
    laplace_L1n,
    laplace_L2n,
    laplace_L2n_bruteforce,
    log_density_unnormalized,
    plan_epsilon_delta,
    sample_finite,
)
from .nonlinear_stationary import (
    LaplaceDomainV,
    NonlinearLaw,
    F_infinity,
    absolute_moment,
    check_centering,
    density_p_infinity,
    laplace_L_infinity,
    phi,
    phi_derivative,
    sample_nonlinear,
    stationary_translation,
)

__all__ = [
    'EpsilonDeltaPlan',
    'FeasibilityCertificate',
    'FiniteLaw',
    'LaplaceDomainV',
    'NonlinearLaw',
    'F_infinity',
    'absolute_moment',
    'check_centering',
    'density_p_infinity',
    'f_minus',
    'f_plus',
    'feasibility',
    'laplace_I',
    'laplace_I_all',
    'laplace_J',
    'laplace_L1n',
    'laplace_L2n',
    'laplace_L2n_bruteforce',
    'laplace_L_infinity',
    'log_density_unnormalized',
    'phi',
    'phi_derivative',
    'plan_epsilon_delta',
    'sample_finite',
    'sample_nonlinear',
    'stationary_translation',
]
