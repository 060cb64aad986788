"""
Empirical samples and Wasserstein distances
"""

from .empirical_sample import EmpiricalSample, SampleProvenance
from .transport_metrics import (
    TransportResult,
    bootstrap_band,
    brute_force_assignment,
    permutation_cost,
    wq_1d_pair,
    wq_1d_vs_quantile,
    wq_kd_assignment,
)

__all__ = [
    'EmpiricalSample',
    'SampleProvenance',
    'TransportResult',
    'bootstrap_band',
    'brute_force_assignment',
    'permutation_cost',
    'wq_1d_pair',
    'wq_1d_vs_quantile',
    'wq_kd_assignment',
]
