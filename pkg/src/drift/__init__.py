"""
Drift model module
"""

from .drift_model import (
    DriftModel,
    InfimumRatios,
    ValidationCheck,
    ValidationReport,
    B,
    b_n,
    infimum_ratios,
    make_linear_drift,
    make_piecewise_linear_drift,
    validate_assumption_E,
)

__all__ = [
    'DriftModel',
    'InfimumRatios',
    'ValidationCheck',
    'ValidationReport',
    'B',
    'b_n',
    'infimum_ratios',
    'make_linear_drift',
    'make_piecewise_linear_drift',
    'validate_assumption_E',
]
