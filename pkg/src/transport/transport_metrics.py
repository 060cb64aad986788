"""
Transport Metrics Module

Wasserstein distances of order q >= 1 between empirical measures, with the
l^q ground norm so that the cost of a pair of k-vectors is sum_m |x_m - y_m|^q:
- Sorted coupling in one dimension, against a sample or a quantile function
- Exact assignment for small k-dimensional samples
- Enumeration of all permutations as a testing oracle
"""

import itertools
import logging
import math
from typing import Callable, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.stats import norm

from .empirical_sample import EmpiricalSample

logger = logging.getLogger(__name__)

MAX_ASSIGNMENT_COUNT = 4096
MAX_ASSIGNMENT_DIMENSION = 8
MAX_BRUTE_FORCE_COUNT = 8

SampleLike = Union[EmpiricalSample, np.ndarray]


class TransportResult(NamedTuple):
    q: float
    distance: float
    method: str
    certificate: Optional[np.ndarray] = None


def _check_q(q: float) -> None:
    if not q >= 1:
        raise ValueError(f"q must be at least 1, got {q}")


def _draws(sample: SampleLike) -> np.ndarray:
    if isinstance(sample, EmpiricalSample):
        return sample.draws
    array = np.asarray(sample, dtype=float)
    return array[:, None] if array.ndim == 1 else array


def _paired(xs: SampleLike, ys: SampleLike) -> Tuple[np.ndarray, np.ndarray]:
    x, y = _draws(xs), _draws(ys)
    if len(x) != len(y):
        raise ValueError(f"samples must have equal counts, got {len(x)} and {len(y)}")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"samples must have equal dimension, got {x.shape[1]} and {y.shape[1]}")
    return x, y


def _root(mean_cost: float, q: float) -> float:
    return max(mean_cost, 0.0) ** (1.0 / q)


def wq_1d_pair(xs: SampleLike, ys: SampleLike, q: float) -> TransportResult:
    """
    W_q between two one-dimensional empirical measures of equal size

    Args:
        xs (SampleLike): First sample
        ys (SampleLike): Second sample
        q (float): Order, at least 1

    Returns:
        TransportResult: Distance of the sorted coupling, which is optimal in 1-D
    """
    _check_q(q)
    x, y = _paired(xs, ys)
    if x.shape[1] != 1:
        raise ValueError(f"wq_1d_pair needs one-dimensional samples, got dimension {x.shape[1]}")
    gaps = np.abs(np.sort(x[:, 0]) - np.sort(y[:, 0]))
    return TransportResult(q, _root(float(np.mean(gaps ** q)), q), 'quantile-1d')


def wq_1d_vs_quantile(xs: SampleLike, quantile: Callable[[np.ndarray], np.ndarray],
                      q: float) -> TransportResult:
    """
    W_q between a one-dimensional sample and a law given by its quantile function

    The law is represented by its quantiles at the midpoints (i - 1/2)/N.

    Args:
        xs (SampleLike): Sample of size N
        quantile (Callable): Vectorised quantile function on (0, 1)
        q (float): Order, at least 1

    Returns:
        TransportResult: Midpoint-rule distance
    """
    _check_q(q)
    x = _draws(xs)
    if x.shape[1] != 1:
        raise ValueError(f"wq_1d_vs_quantile needs a one-dimensional sample, got dimension {x.shape[1]}")
    count = len(x)
    levels = (np.arange(1, count + 1) - 0.5) / count
    targets = np.asarray(quantile(levels), dtype=float)
    gaps = np.abs(np.sort(x[:, 0]) - targets)
    return TransportResult(q, _root(float(np.mean(gaps ** q)), q), 'quantile-1d')


def _cost_matrix(x: np.ndarray, y: np.ndarray, q: float) -> np.ndarray:
    if q == 1:
        return cdist(x, y, 'cityblock')
    return cdist(x, y, 'minkowski', p=q) ** q


def wq_kd_assignment(X: SampleLike, Y: SampleLike, q: float) -> TransportResult:
    """
    Exact W_q between two k-dimensional empirical measures of equal size

    Args:
        X (SampleLike): First sample, N <= 4096 draws of dimension k <= 8
        Y (SampleLike): Second sample
        q (float): Order, at least 1

    Returns:
        TransportResult: Distance and the optimal permutation (row i matched to certificate[i])
    """
    _check_q(q)
    x, y = _paired(X, Y)
    if len(x) > MAX_ASSIGNMENT_COUNT:
        raise ValueError(f"assignment supports at most {MAX_ASSIGNMENT_COUNT} draws, got {len(x)}")
    if x.shape[1] > MAX_ASSIGNMENT_DIMENSION:
        raise ValueError(f"assignment supports dimension at most {MAX_ASSIGNMENT_DIMENSION}, got {x.shape[1]}")
    cost = _cost_matrix(x, y, q)
    rows, columns = linear_sum_assignment(cost)
    mean_cost = math.fsum(cost[rows, columns]) / len(x)
    return TransportResult(q, _root(mean_cost, q), 'assignment-exact', columns)


def brute_force_assignment(X: SampleLike, Y: SampleLike, q: float) -> TransportResult:
    """
    W_q by enumerating every matching, N <= 8
    """
    _check_q(q)
    x, y = _paired(X, Y)
    if len(x) > MAX_BRUTE_FORCE_COUNT:
        raise ValueError(f"brute force supports at most {MAX_BRUTE_FORCE_COUNT} draws, got {len(x)}")
    cost = _cost_matrix(x, y, q)
    rows = np.arange(len(x))
    best, best_permutation = math.inf, None
    for permutation in itertools.permutations(range(len(x))):
        total = math.fsum(cost[rows, list(permutation)])
        if total < best:
            best, best_permutation = total, np.array(permutation)
    return TransportResult(q, _root(best / len(x), q), 'assignment-bruteforce', best_permutation)


def permutation_cost(X: SampleLike, Y: SampleLike, q: float, permutation) -> float:
    """
    Mean l^q cost of matching X[i] with Y[permutation[i]]
    """
    x, y = _paired(X, Y)
    return float(np.mean(np.sum(np.abs(x - y[np.asarray(permutation)]) ** q, axis=1)))


def bootstrap_band(distance_fn: Callable[[EmpiricalSample], TransportResult], sample: EmpiricalSample,
                   resamples: int, rng: np.random.Generator, level: float = 0.95) -> Tuple[float, float]:
    """
    Normal confidence band for a distance from bootstrap resamples of the sample

    Args:
        distance_fn (Callable): Maps a sample to a TransportResult
        sample (EmpiricalSample): Sample to resample
        resamples (int): Number of bootstrap resamples, at least 2
        rng (np.random.Generator): Generator for the resampling indices
        level (float): Coverage of the band

    Returns:
        Tuple[float, float]: Lower (floored at 0) and upper ends of the band
    """
    if resamples < 2:
        raise ValueError(f"need at least two bootstrap resamples, got {resamples}")
    centre = distance_fn(sample).distance
    values = np.array([distance_fn(sample.resample(rng)).distance for _ in range(resamples)])
    half_width = norm.ppf(0.5 + 0.5 * level) * float(np.std(values, ddof=1))
    logger.debug(f"bootstrap band {centre:.4g} +/- {half_width:.3g} from {resamples} resamples")
    return max(centre - half_width, 0.0), centre + half_width
