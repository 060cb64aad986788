"""
Monte Carlo estimators

Sample means with standard errors for i.i.d. draws and for correlated chains
(batch means), autocorrelation-based effective sample size, and the empirical
Laplace transforms used to check samplers and simulations against closed forms.
"""

import math
from typing import NamedTuple, Optional

import numpy as np

from ..transport.empirical_sample import EmpiricalSample


class MonteCarloEstimate(NamedTuple):
    value: float
    standard_error: float
    effective_sample_size: float

    def within(self, reference: float, sigmas: float) -> bool:
        """
        Whether the reference lies within the given number of standard errors
        """
        return abs(self.value - reference) <= sigmas * self.standard_error


def batch_means_standard_error(values: np.ndarray, batches: int = 50) -> float:
    """
    Standard error of the mean of a stationary correlated series

    Args:
        values (np.ndarray): Series in time order
        batches (int): Number of contiguous batches

    Returns:
        float: Standard deviation of batch means divided by sqrt(batches)
    """
    values = np.asarray(values, dtype=float)
    if batches < 2:
        raise ValueError(f"batches must be at least 2, got {batches}")
    size = len(values) // batches
    if size < 1:
        raise ValueError(f"series of length {len(values)} is too short for {batches} batches")
    means = values[:size * batches].reshape(batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(batches))


def effective_sample_size(values: np.ndarray) -> float:
    """
    Effective sample size from the FFT autocorrelation, truncated at the
    first non-positive sum of consecutive lag pairs
    """
    values = np.asarray(values, dtype=float)
    count = len(values)
    if count < 4:
        return float(count)
    centred = values - values.mean()
    variance = float(np.dot(centred, centred)) / count
    if variance == 0.0:
        return float(count)

    size = 1 << (2 * count - 1).bit_length()
    spectrum = np.fft.rfft(centred, n=size)
    autocorrelation = np.fft.irfft(spectrum * np.conjugate(spectrum), n=size)[:count] / (count * variance)

    tau = 1.0
    for lag in range(1, count - 1, 2):
        pair = autocorrelation[lag] + autocorrelation[lag + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
    return float(count / tau)


def mean_estimate(values: np.ndarray, batches: Optional[int] = None) -> MonteCarloEstimate:
    """
    Sample mean with an i.i.d. standard error, or a batch-means one when batches is given
    """
    values = np.asarray(values, dtype=float)
    count = len(values)
    if count < 2:
        raise ValueError(f"need at least two values for a standard error, got {count}")
    if batches is None:
        error = float(np.std(values, ddof=1) / math.sqrt(count))
        return MonteCarloEstimate(float(values.mean()), error, float(count))
    return MonteCarloEstimate(float(values.mean()), batch_means_standard_error(values, batches),
                              effective_sample_size(values))


def mc_laplace_pair(sample: EmpiricalSample, s: float, t: float,
                    batches: Optional[int] = None) -> MonteCarloEstimate:
    """
    Empirical E[exp(s z_1 + t z_2)] from the first two coordinates

    Args:
        sample (EmpiricalSample): Draws of dimension at least 2
        s (float): Coefficient of the first coordinate
        t (float): Coefficient of the second coordinate
        batches (Optional[int]): Batch count for correlated draws

    Returns:
        MonteCarloEstimate: Estimate and standard error
    """
    if sample.dimension < 2:
        raise ValueError(f"pair transform needs dimension >= 2, got {sample.dimension}")
    values = np.exp(s * sample.draws[:, 0] + t * sample.draws[:, 1])
    return mean_estimate(values, batches)


def mc_laplace_marginal(sample: EmpiricalSample, t: float, pooled: bool = False,
                        batches: Optional[int] = None) -> MonteCarloEstimate:
    """
    Empirical E[exp(t z_1)]

    Args:
        sample (EmpiricalSample): Draws
        t (float): Transform argument
        pooled (bool): Average over all exchangeable coordinates of each draw
        batches (Optional[int]): Batch count for correlated draws

    Returns:
        MonteCarloEstimate: Estimate and standard error
    """
    if pooled:
        values = np.exp(t * sample.draws).mean(axis=1)
    else:
        values = np.exp(t * sample.draws[:, 0])
    return mean_estimate(values, batches)
