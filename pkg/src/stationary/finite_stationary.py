"""
Finite Stationary Law Module

This module handles the stationary law of the projected n-particle system:
- Unnormalised log-density on the zero-sum hyperplane M_n
- Exact sampling through independent exponential spacings
- Closed-form Laplace transforms of one and two coordinates
- Feasibility of the product formulas and a-priori n0 planning

The ordered gaps z_(l+1) - z_(l) are independent exponentials with rates
lambda_l = 2n B(l/n) / sigma^2, and the coefficient of gap l in z_(i) is l/n
for l < i and -(1 - l/n) otherwise. Every Laplace product follows from this.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from ..drift.drift_model import DriftModel, infimum_ratios, validate_assumption_E
from ..errors import ConfigurationError, LaplaceDomainError, NumericalError
from ..transport.empirical_sample import EmpiricalSample, SampleProvenance

logger = logging.getLogger(__name__)

SAMPLE_CHUNK_ENTRIES = 1 << 22
DELTA_GRID_POINTS = 200
SUM_TOLERANCE = 1e-9


class FiniteLaw:
    """
    Stationary law of the projected n-particle system
    """

    def __init__(self, model: DriftModel, n: int):
        """
        Args:
            model (DriftModel): Drift model satisfying the equilibrium assumption
            n (int): Number of particles, at least 2
        """
        if not isinstance(n, (int, np.integer)) or n < 2:
            raise ConfigurationError(f"n must be an integer >= 2, got {n}", location='n')
        report = validate_assumption_E(model)
        if not report.passed:
            raise ConfigurationError(f"drift model fails Assumption (E): {report.message}", location='model')

        self.model = model
        self.n = int(n)
        self.rank_weights = model.rank_weights(self.n)
        grid = np.arange(1, self.n) / self.n
        self._grid = grid
        self._B = np.asarray(model.stable_antiderivative(grid), dtype=float)
        self.gap_rates = 2.0 * self.n * self._B / model.sigma2

        if abs(self.rank_weights.sum()) > 1e-12 * self.n + abs(model.B1) * self.n:
            logger.warning(f"rank weights of n={n} sum to {self.rank_weights.sum():.3e}")
        if np.any(self.gap_rates <= 0):
            raise ConfigurationError(f"gap rates must be positive for n={n}", location='model')

    def f_plus(self, r: float) -> np.ndarray:
        """
        f+_k(r) = r (sigma^2 / 2n) (k/n) / B(k/n) for k = 1..n-1
        """
        return r * self._grid / self.gap_rates

    def f_minus(self, r: float) -> np.ndarray:
        """
        f-_k(r) = -r (sigma^2 / 2n) (1 - k/n) / B(k/n) for k = 1..n-1
        """
        return -r * (1.0 - self._grid) / self.gap_rates

    def feasibility(self, s: float, t: float) -> 'FeasibilityCertificate':
        """
        Denominator certificate of the Laplace products at (s, t) for this n
        """
        return _certificate(self, s, t)

    def __repr__(self) -> str:
        return f"FiniteLaw({self.model!r}, n={self.n})"


@dataclass
class FeasibilityCertificate:
    """
    The four denominator families of the Laplace products, k = 1..n-1
    """

    n: int
    s: float
    t: float
    denominators: Dict[str, np.ndarray]
    min_denominator: float
    argmin: Optional[int]
    feasible: bool


@dataclass
class EpsilonDeltaPlan:
    epsilon: float
    delta: float
    alpha_bar: float
    n0: int
    m_minus: float
    m_plus: float


class _LogFactors(NamedTuple):
    """
    -log of each denominator family, indexed by k = 1..n-1 at position k-1
    """

    low: np.ndarray
    middle: np.ndarray
    swapped: np.ndarray
    high: np.ndarray


def _check_k(n: int, k: int) -> None:
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} out of range 1..{n - 1}")


def f_plus(model: DriftModel, n: int, k: int, r: float) -> float:
    """
    Compute f+_{k,n}(r) = r (sigma^2 / 2n) (k/n) / B(k/n)
    """
    _check_k(n, k)
    u = k / n
    return r * model.sigma2 / (2.0 * n) * u / model.stable_antiderivative(u)


def f_minus(model: DriftModel, n: int, k: int, r: float) -> float:
    """
    Compute f-_{k,n}(r) = -r (sigma^2 / 2n) (1 - k/n) / B(k/n)
    """
    _check_k(n, k)
    u = k / n
    return -r * model.sigma2 / (2.0 * n) * (1.0 - u) / model.stable_antiderivative(u)


def _offsets(law: FiniteLaw, s: float, t: float) -> Dict[str, np.ndarray]:
    """
    The f-sums whose complements to 1 are the product denominators
    """
    return {
        'low': law.f_plus(s + t),
        'middle': law.f_plus(t) + law.f_minus(s),
        'swapped': law.f_plus(s) + law.f_minus(t),
        'high': law.f_minus(s + t),
    }


def _certificate(law: FiniteLaw, s: float, t: float) -> FeasibilityCertificate:
    denominators = {name: 1.0 - offset for name, offset in _offsets(law, s, t).items()}
    stacked = np.vstack(list(denominators.values()))
    column = int(np.argmin(stacked.min(axis=0)))
    minimum = float(stacked[:, column].min())
    feasible = minimum > 0.0
    return FeasibilityCertificate(law.n, s, t, denominators, minimum,
                                  None if feasible else column + 1, feasible)


def feasibility(model: DriftModel, n: int, s: float, t: float) -> FeasibilityCertificate:
    """
    Check that every denominator of the Laplace products is positive

    Args:
        model (DriftModel): Drift model
        n (int): Number of particles
        s (float): First transform argument
        t (float): Second transform argument

    Returns:
        FeasibilityCertificate: All denominators, their minimum, and the offending k if any
    """
    return FiniteLaw(model, n).feasibility(s, t)


def _log_factors(law: FiniteLaw, s: float, t: float) -> _LogFactors:
    certificate = _certificate(law, s, t)
    if not certificate.feasible:
        raise LaplaceDomainError(
            f"Laplace product diverges at n={law.n}, (s,t)=({s},{t}): "
            f"denominator {certificate.min_denominator:.6g} <= 0 at k={certificate.argmin}",
            k=certificate.argmin,
        )
    offsets = _offsets(law, s, t)
    # log1p keeps full precision for the many factors that are close to 1
    return _LogFactors(*(-np.log1p(-offsets[name]) for name in ('low', 'middle', 'swapped', 'high')))


def _prefix(values: np.ndarray) -> np.ndarray:
    """
    P[i] = sum of values[:i], i = 0..len(values)
    """
    return np.concatenate(([0.0], np.cumsum(values)))


def _suffix(values: np.ndarray) -> np.ndarray:
    """
    S[i] = sum of values[i:], i = 0..len(values)
    """
    return np.concatenate((np.cumsum(values[::-1])[::-1], [0.0]))


def _check_on_hyperplane(z: np.ndarray) -> None:
    if abs(z.sum()) > SUM_TOLERANCE * len(z):
        raise ValueError(f"z is not on M_n: coordinate sum {z.sum():.3e}")


def log_density_unnormalized(law: FiniteLaw, z) -> float:
    """
    (2 / sigma^2) * sum_k b_n(k) z_(k) over the sorted coordinates of z

    Args:
        law (FiniteLaw): Finite stationary law
        z (array-like): Point of M_n

    Returns:
        float: Unnormalised log-density
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (law.n,):
        raise ValueError(f"z must have length {law.n}, got shape {z.shape}")
    _check_on_hyperplane(z)
    ordered = np.sort(z, kind='stable')
    return float(2.0 / law.model.sigma2 * math.fsum(law.rank_weights * ordered))


def _ordered_draws(law: FiniteLaw, rng: np.random.Generator, count: int) -> np.ndarray:
    gaps = rng.standard_exponential((count, law.n - 1)) / law.gap_rates
    ordered = np.zeros((count, law.n))
    np.cumsum(gaps, axis=1, out=ordered[:, 1:])
    ordered -= ordered.mean(axis=1, keepdims=True)
    return ordered


def sample_finite(law: FiniteLaw, rng: np.random.Generator, count: int,
                  seed: Optional[int] = None, coordinates: Optional[int] = None) -> EmpiricalSample:
    """
    Exact draws from the n-particle stationary law

    Args:
        law (FiniteLaw): Finite stationary law
        rng (np.random.Generator): Caller-owned generator
        count (int): Number of draws, at least 1
        seed (Optional[int]): Seed recorded in the provenance tag
        coordinates (Optional[int]): Keep only the first k coordinates of each draw

    Returns:
        EmpiricalSample: Draws of dimension n (or k), each on M_n before truncation
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    k = law.n if coordinates is None else int(coordinates)
    if not 1 <= k <= law.n:
        raise ValueError(f"coordinates={coordinates} out of range for n={law.n}")

    chunk = max(1, SAMPLE_CHUNK_ENTRIES // law.n)
    out = np.empty((count, k))
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        ordered = _ordered_draws(law, rng, stop - start)
        out[start:stop] = rng.permuted(ordered, axis=1)[:, :k]
    logger.debug(f"Drew {count} exact samples at n={law.n}")
    return EmpiricalSample(out, SampleProvenance('finite-exponential-gaps', seed, law.n, count))


def laplace_I_all(law: FiniteLaw, t: float) -> np.ndarray:
    """
    I^n_i(t) = E[exp(t z_(i))] for i = 1..n

    Args:
        law (FiniteLaw): Finite stationary law
        t (float): Transform argument

    Returns:
        np.ndarray: The n rank-resolved transforms
    """
    factors = _log_factors(law, t, 0.0)
    # with s = 0 the low family is 1 - f+(t) and the high family is 1 - f-(t)
    log_values = _prefix(factors.low) + _suffix(factors.high)
    return np.exp(log_values)


def laplace_I(law: FiniteLaw, i: int, t: float) -> float:
    """
    Laplace transform of the i-th order statistic
    """
    if not 1 <= i <= law.n:
        raise ValueError(f"rank i={i} out of range 1..{law.n}")
    factors = _log_factors(law, t, 0.0)
    return math.exp(math.fsum(factors.low[:i - 1]) + math.fsum(factors.high[i - 1:]))


def laplace_L1n(law: FiniteLaw, t: float) -> float:
    """
    L^{1,n}(t), the average of I^n_i(t) over ranks
    """
    factors = _log_factors(law, t, 0.0)
    log_values = _prefix(factors.low) + _suffix(factors.high)
    return math.exp(logsumexp(log_values) - math.log(law.n))


def laplace_J(law: FiniteLaw, i: int, j: int, s: float, t: float) -> float:
    """
    J^n_{i,j}(s,t) = E[exp(s z_(i) + t z_(j))] for distinct ranks i and j

    Args:
        law (FiniteLaw): Finite stationary law
        i (int): Rank carrying s
        j (int): Rank carrying t
        s (float): First transform argument
        t (float): Second transform argument

    Returns:
        float: Two-rank transform
    """
    if i == j:
        raise ValueError(f"ranks must differ, got i=j={i}")
    for name, rank in (('i', i), ('j', j)):
        if not 1 <= rank <= law.n:
            raise ValueError(f"rank {name}={rank} out of range 1..{law.n}")
    factors = _log_factors(law, s, t)
    lo, hi = min(i, j), max(i, j)
    middle = factors.middle if i < j else factors.swapped
    return math.exp(math.fsum(factors.low[:lo - 1]) + math.fsum(middle[lo - 1:hi - 1])
                    + math.fsum(factors.high[hi - 1:]))


def _log_ordered_pair_sum(low: np.ndarray, middle: np.ndarray, high: np.ndarray) -> float:
    """
    log of the sum over i < j of exp(P_low[i] + P_mid[j] - P_mid[i] + S_high[j])
    """
    left = _prefix(low)[:-1] - _prefix(middle)[:-1]
    right = _prefix(middle)[1:] + _suffix(high)[1:]
    # running log-sum of left[0..j-1] pairs with right[j-1] (rank j+1)
    running = np.logaddexp.accumulate(left)
    return float(logsumexp(running + right))


def laplace_L2n(law: FiniteLaw, s: float, t: float) -> float:
    """
    L^{2,n}(s,t) = E[exp(s z_1 + t z_2)], the average of J over ordered rank pairs

    The double sum factorises through prefix sums of the log-factors,
    so the cost is linear in n.

    Args:
        law (FiniteLaw): Finite stationary law
        s (float): First transform argument
        t (float): Second transform argument

    Returns:
        float: Two-coordinate Laplace transform
    """
    factors = _log_factors(law, s, t)
    below = _log_ordered_pair_sum(factors.low, factors.middle, factors.high)
    above = _log_ordered_pair_sum(factors.low, factors.swapped, factors.high)
    n = law.n
    value = math.exp(np.logaddexp(below, above) - math.log(n) - math.log(n - 1))
    if not math.isfinite(value):
        raise NumericalError(f"L2n overflowed at n={n}, (s,t)=({s},{t})")
    return value


def laplace_L2n_bruteforce(law: FiniteLaw, s: float, t: float) -> float:
    """
    Double average of laplace_J over every ordered pair of distinct ranks
    """
    factors = _log_factors(law, s, t)
    n = law.n
    logs = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            lo, hi = min(i, j), max(i, j)
            middle = factors.middle if i < j else factors.swapped
            logs.append(math.fsum(factors.low[:lo - 1]) + math.fsum(middle[lo - 1:hi - 1])
                        + math.fsum(factors.high[hi - 1:]))
    return math.exp(logsumexp(logs) - math.log(n * (n - 1)))


def plan_epsilon_delta(model: DriftModel, s: float, t: float) -> EpsilonDeltaPlan:
    """
    A-priori n0 beyond which every Laplace denominator exceeds 1 - alpha_bar

    epsilon is half the smallest slack of s, t and s+t in V (capped at half of
    b(0) and -b(1)); delta is the largest point of a geometric grid in (0, 1/2)
    where the endpoint linear lower bounds on B hold. Concavity of B makes the
    check at u = delta and u = 1 - delta exact.

    Args:
        model (DriftModel): Drift model satisfying the equilibrium assumption
        s (float): First transform argument
        t (float): Second transform argument

    Returns:
        EpsilonDeltaPlan: epsilon, delta, alpha_bar, n0 and the infimum ratios used
    """
    half = 0.5 * model.sigma2
    b0, minus_b1 = model.b0, -model.b1
    slacks = []
    for r in (s, t, s + t):
        lower_slack, upper_slack = b0 + r * half, minus_b1 - r * half
        if lower_slack <= 0.0 or upper_slack <= 0.0:
            raise LaplaceDomainError(f"(s,t)=({s},{t}) is outside V2: r={r} leaves V",
                                     bound='lower' if lower_slack <= 0.0 else 'upper')
        slacks.append(min(lower_slack, upper_slack))
    epsilon = min(0.5 * min(slacks), 0.5 * min(b0, minus_b1))

    delta = None
    for j in range(1, DELTA_GRID_POINTS + 1):
        candidate = 0.5 * 2.0 ** (-j / 4.0)
        if (model.stable_antiderivative(candidate) >= candidate * (b0 - epsilon)
                and model.stable_antiderivative(1.0 - candidate) >= candidate * (minus_b1 - epsilon)):
            delta = candidate
            break
    if delta is None:
        raise NumericalError(f"no delta in (0, 1/2) satisfies the endpoint bounds for epsilon={epsilon}")

    m_minus, m_plus = infimum_ratios(model, delta)

    def positive(r):
        return max(r, 0.0)

    def negative(r):
        return max(-r, 0.0)

    def alpha_plus(r):
        return positive(r) * half / (minus_b1 - epsilon)

    def alpha_minus(r):
        return negative(r) * half / (b0 - epsilon)

    alpha_bar = max(0.5, alpha_plus(s + t), alpha_minus(s + t),
                    0.5 * (alpha_plus(s) + 1.0), 0.5 * (alpha_minus(s) + 1.0),
                    0.5 * (alpha_plus(t) + 1.0), 0.5 * (alpha_minus(t) + 1.0))

    # every condition reads A / n <= C with C > 0
    conditions = [
        (positive(s + t) * half / m_minus, 0.5),
        (negative(s + t) * half / m_plus, 0.5),
    ]
    for first, second in ((s, t), (t, s)):
        conditions.extend([
            (positive(second) * half / m_minus, 0.5 * (1.0 - alpha_minus(first))),
            (positive(second) * half / m_minus + negative(first) * half / m_plus, 0.5),
            (negative(first) * half / m_plus, 0.5 * (1.0 - alpha_plus(second))),
        ])
    n0 = 2
    for numerator, bound in conditions:
        if numerator > 0.0:
            n0 = max(n0, int(math.ceil(numerator / bound)))

    logger.debug(f"plan for (s,t)=({s},{t}): eps={epsilon:.4g} delta={delta:.4g} "
                 f"alpha_bar={alpha_bar:.4g} n0={n0}")
    return EpsilonDeltaPlan(epsilon, delta, alpha_bar, n0, m_minus, m_plus)
