"""
Nonlinear Stationary Law Module

This module computes the centred stationary law of the mean-field rank-based
diffusion through its quantile function:
- The quantile function Phi and its derivative
- The distribution function F (inverse of Phi) and the density
- The Laplace transform L(r) on its open domain V
- Inverse-CDF sampling and the centring identity

Phi(u) = a0 log(u) - a1 log(1-u) + R(u) where a0 = sigma^2/(2 b(0)),
a1 = sigma^2/(-2 b(1)) and the remainder R is bounded and C^1 on [0, 1].
R is tabulated once per law on a Chebyshev grid and interpolated with a
cubic Hermite spline using its exact derivative.
"""

import copy
import logging
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.special import expit, log_expit

from ..drift.drift_model import DriftModel, validate_assumption_E
from ..errors import ConfigurationError, LaplaceDomainError, NumericalError
from ..numerics.quadrature import TanhSinhQuadrature
from ..transport.empirical_sample import EmpiricalSample, SampleProvenance

logger = logging.getLogger(__name__)

U_CLAMP = 1e-15
LOGIT_CLAMP = math.log((1.0 - U_CLAMP) / U_CLAMP)


class LaplaceDomainV(NamedTuple):
    lower: float
    upper: float

    def contains(self, r: float) -> bool:
        return self.lower < r < self.upper

    def check(self, r: float) -> None:
        """
        Raise LaplaceDomainError naming the violated bound when r is not strictly inside
        """
        if r <= self.lower:
            raise LaplaceDomainError(f"r={r} is not above the lower bound {self.lower} of V",
                                     bound='lower')
        if r >= self.upper:
            raise LaplaceDomainError(f"r={r} is not below the upper bound {self.upper} of V",
                                     bound='upper')

    def contains_pair(self, s: float, t: float) -> bool:
        """
        Membership of (s, t) in V2 = {s, t, s+t all in V}
        """
        return self.contains(s) and self.contains(t) and self.contains(s + t)


class NonlinearLaw:
    """
    Stationary law of the nonlinear diffusion, translated by `translation`
    """

    def __init__(self, model: DriftModel, translation: float = 0.0, grid_size: int = 4096,
                 panel_order: int = 16, tolerance: float = 1e-11):
        """
        Args:
            model (DriftModel): Drift model satisfying the equilibrium assumption
            translation (float): Mean of the law; 0 selects the centred law
            grid_size (int): Number of Chebyshev points of the remainder table
            panel_order (int): Gauss-Legendre points per grid panel
            tolerance (float): Relative tolerance of the tanh-sinh integrals
        """
        report = validate_assumption_E(model)
        if not report.passed:
            raise ConfigurationError(f"drift model fails Assumption (E): {report.message}", location='model')

        self.model = model
        self.translation = float(translation)
        self.grid_size = grid_size
        self.panel_order = panel_order
        self.quadrature = TanhSinhQuadrature(tolerance=tolerance)
        self.logger = logging.getLogger(__name__)

        sigma2 = model.sigma2
        self.a0 = sigma2 / (2.0 * model.b0)
        self.a1 = sigma2 / (-2.0 * model.b1)
        # Phi(u) ~ tail_exponent_0 log u at 0 and ~ tail_exponent_1 log(1 - u) at 1
        self.tail_exponent_0 = self.a0
        self.tail_exponent_1 = sigma2 / (2.0 * model.b1)
        self.domain = LaplaceDomainV(-2.0 * model.b0 / sigma2, -2.0 * model.b1 / sigma2)

        nodes = model.nodes[:, 0]
        self._breakpoints = nodes
        self._interior_nodes = nodes[1:-1]

        self._remainder_centre = self._phi_half() + (self.a0 - self.a1) * math.log(2.0)
        self._remainder = self._build_remainder_table()
        self.logger.debug(f"Built quantile table for {model!r} with {len(self._remainder.x)} points")

    # ------------------------------------------------------------------
    # construction helpers

    def _remainder_slope(self, u):
        """
        R'(u) = sigma^2/(2B(u)) - a0/u - a1/(1-u), bounded on (0, 1)
        """
        u = np.asarray(u, dtype=float)
        H = np.asarray(self.model.reduced_antiderivative(u))
        half = 0.5 * self.model.sigma2
        inv = 1.0 / H
        return half * ((inv - 1.0 / self.model.b0) / u + (inv - 1.0 / (-self.model.b1)) / (1.0 - u))

    def _phi_half(self) -> float:
        """
        Phi(1/2) from the defining pair of integrals, both with bounded integrands
        """
        half = 0.5 * self.model.sigma2
        H = self.model.reduced_antiderivative
        left_points = [p for p in self._interior_nodes if p < 0.5] or None
        right_points = [p for p in self._interior_nodes if p > 0.5] or None

        left, _, left_info, *left_msg = quad(lambda v: half / ((1.0 - v) * H(v)), 0.0, 0.5,
                                             points=left_points, epsabs=1e-15, epsrel=1e-13,
                                             limit=200, full_output=1)
        right, _, right_info, *right_msg = quad(lambda v: half / (v * H(v)), 0.5, 1.0,
                                                points=right_points, epsabs=1e-15, epsrel=1e-13,
                                                limit=200, full_output=1)
        if left_msg or right_msg:
            raise NumericalError(f"quadrature for Phi(1/2) did not converge: {left_msg or right_msg}")
        return left - right

    def _build_remainder_table(self) -> CubicHermiteSpline:
        k = np.arange(self.grid_size)
        chebyshev = 0.5 * (1.0 - np.cos(np.pi * (k + 0.5) / self.grid_size))
        grid = np.union1d(np.union1d(chebyshev, self._interior_nodes), [0.5])

        x, w = np.polynomial.legendre.leggauss(self.panel_order)
        left, right = grid[:-1], grid[1:]
        mid, half_width = 0.5 * (left + right), 0.5 * (right - left)
        points = mid[:, None] + half_width[:, None] * x[None, :]
        panels = half_width * (self._remainder_slope(points) @ w)

        centre = int(np.searchsorted(grid, 0.5))
        values = np.empty_like(grid)
        values[centre] = self._remainder_centre
        values[centre + 1:] = self._remainder_centre + np.cumsum(panels[centre:])
        values[:centre] = self._remainder_centre - np.cumsum(panels[:centre][::-1])[::-1]
        return CubicHermiteSpline(grid, values, self._remainder_slope(grid))

    # ------------------------------------------------------------------
    # evaluation

    def remainder(self, u, exact: bool = False):
        """
        Bounded part R(u) of the quantile function

        Args:
            u (float or np.ndarray): Points of [0, 1]
            exact (bool): Integrate R' directly instead of using the table

        Returns:
            float or np.ndarray: R(u)
        """
        if not exact:
            value = self._remainder(np.asarray(u, dtype=float))
            return value if np.ndim(value) else float(value)

        def one(point: float) -> float:
            lo, hi = sorted((0.5, point))
            if lo == hi:
                return self._remainder_centre
            inside = [p for p in self._interior_nodes if lo < p < hi] or None
            value, _, info, *message = quad(lambda v: float(self._remainder_slope(v)), lo, hi,
                                            points=inside, epsabs=1e-14, epsrel=1e-13,
                                            limit=200, full_output=1)
            if message:
                raise NumericalError(f"quadrature for R({point}) did not converge: {message[0]}")
            return self._remainder_centre + (value if point >= 0.5 else -value)

        u = np.asarray(u, dtype=float)
        if u.ndim == 0:
            return one(float(u))
        return np.array([one(p) for p in u.ravel()]).reshape(u.shape)

    def _phi_pair(self, u, w, exact: bool = False):
        """
        Phi + translation evaluated from u and 1-u given separately
        """
        with np.errstate(divide='ignore'):
            return (self.a0 * np.log(u) - self.a1 * np.log(w)
                    + self.remainder(u, exact=exact) + self.translation)

    def _phi_logit(self, y):
        """
        Phi + translation as a function of y = log(u/(1-u))
        """
        return (self.a0 * log_expit(y) - self.a1 * log_expit(-y)
                + self.remainder(expit(y)) + self.translation)

    def with_translation(self, translation: float) -> 'NonlinearLaw':
        """
        Same law translated to the given mean, sharing the quantile table
        """
        translated = copy.copy(self)
        translated.translation = float(translation)
        return translated

    def __repr__(self) -> str:
        return f"NonlinearLaw({self.model!r}, translation={self.translation})"


def _check_open_unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u >= 1.0)) or np.any(~np.isfinite(u)):
        raise ValueError("u must lie strictly inside (0, 1)")
    return u


def phi(law: NonlinearLaw, u, exact: bool = False):
    """
    Quantile function Phi(u) + translation

    Args:
        law (NonlinearLaw): Stationary law
        u (float or np.ndarray): Points of (0, 1)
        exact (bool): Use direct adaptive quadrature (verification mode)

    Returns:
        float or np.ndarray: Quantiles
    """
    u = _check_open_unit(u)
    value = law._phi_pair(u, 1.0 - u, exact=exact)
    return value if np.ndim(value) else float(value)


def phi_derivative(law: NonlinearLaw, u):
    """
    Phi'(u) = sigma^2 / (2 B(u)), in closed form
    """
    u = _check_open_unit(u)
    H = np.asarray(law.model.reduced_antiderivative(u))
    value = 0.5 * law.model.sigma2 / (u * (1.0 - u) * H)
    return value if np.ndim(value) else float(value)


def _quantile_logit(law: NonlinearLaw, x: float) -> float:
    """
    Solve Phi(expit(y)) + translation = x for y, clamped to |y| <= logit(1 - 1e-15)
    """
    target = x - law.translation

    def residual(y: float) -> float:
        return float(law._phi_logit(y)) - x

    if residual(-LOGIT_CLAMP) >= 0.0:
        return -LOGIT_CLAMP
    if residual(LOGIT_CLAMP) <= 0.0:
        return LOGIT_CLAMP

    # Seed the bracket from the logarithmic tails of Phi
    lo_u = min(max(math.exp(min((target - 1.0) / law.tail_exponent_0, 0.0)), U_CLAMP), 0.5)
    hi_u = max(min(1.0 - math.exp(min((target + 1.0) / law.tail_exponent_1, 0.0)), 1.0 - U_CLAMP), 0.5)
    lo, hi = math.log(lo_u / (1.0 - lo_u)), math.log(hi_u / (1.0 - hi_u))
    step = 1.0
    while residual(lo) > 0.0:
        lo = max(lo - step, -LOGIT_CLAMP)
        step *= 2.0
    step = 1.0
    while residual(hi) < 0.0:
        hi = min(hi + step, LOGIT_CLAMP)
        step *= 2.0

    y = brentq(residual, lo, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    half = 0.5 * law.model.sigma2
    for _ in range(2):
        # d Phi / dy = sigma^2 / (2 H(u))
        slope = half / float(law.model.reduced_antiderivative(float(expit(y))))
        y = min(max(y - residual(y) / slope, lo), hi)
    return y


def F_infinity(law: NonlinearLaw, x):
    """
    Distribution function F, the inverse of Phi + translation

    Args:
        law (NonlinearLaw): Stationary law
        x (float or np.ndarray): Real points

    Returns:
        float or np.ndarray: F(x) in (0, 1)
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return float(expit(_quantile_logit(law, float(x))))
    return np.array([expit(_quantile_logit(law, float(p))) for p in x.ravel()]).reshape(x.shape)


def density_p_infinity(law: NonlinearLaw, x):
    """
    Density (2/sigma^2) B(F(x))
    """
    def one(point: float) -> float:
        y = _quantile_logit(law, point)
        u, w = float(expit(y)), float(expit(-y))
        return 2.0 / law.model.sigma2 * u * w * float(law.model.reduced_antiderivative(u))

    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return one(float(x))
    return np.array([one(float(p)) for p in x.ravel()]).reshape(x.shape)


def laplace_L_infinity(law: NonlinearLaw, r: float) -> float:
    """
    Laplace transform L(r) = integral over (0,1) of exp(r (Phi(u) + translation))

    Args:
        law (NonlinearLaw): Stationary law
        r (float): Point strictly inside V

    Returns:
        float: L(r)
    """
    law.domain.check(r)
    if r == 0.0:
        return 1.0

    def log_integrand(u, w):
        return r * law._phi_pair(u, w)

    result = law.quadrature.integrate_pieces(log_integrand, law._breakpoints, log=True)
    if not math.isfinite(result.value):
        raise NumericalError(f"L_inf({r}) quadrature produced {result.value}")
    if result.error > 1e-9 * result.value:
        law.logger.error(f"L_inf({r}) did not reach the 1e-9 target")
        raise NumericalError(f"L_inf({r}) reached relative change {result.error / result.value:.2e}")
    return result.value


def check_centering(law: NonlinearLaw) -> float:
    """
    Integral of Phi + translation over (0, 1); zero for the centred law
    """
    result = law.quadrature.integrate_pieces(law._phi_pair, law._breakpoints, log=False)
    return result.value


def absolute_moment(law: NonlinearLaw, p: float) -> float:
    """
    p-th absolute moment of the law, the integral of |Phi + translation|^p over (0, 1)

    Args:
        law (NonlinearLaw): Stationary law
        p (float): Positive order

    Returns:
        float: Moment value
    """
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    median_zero = F_infinity(law, 0.0)
    breakpoints = np.union1d(law._breakpoints, [median_zero])

    def integrand(u, w):
        return np.abs(law._phi_pair(u, w)) ** p

    return law.quadrature.integrate_pieces(integrand, breakpoints, log=False).value


def stationary_translation(law: NonlinearLaw, mean: float) -> NonlinearLaw:
    """
    The stationary law of the nonlinear diffusion with the given mean
    """
    return law.with_translation(mean)


def sample_nonlinear(law: NonlinearLaw, rng: np.random.Generator, count: int,
                     seed: Optional[int] = None) -> EmpiricalSample:
    """
    Inverse-CDF draws Phi(U) + translation with U uniform on (0, 1)

    Args:
        law (NonlinearLaw): Stationary law
        rng (np.random.Generator): Caller-owned generator
        count (int): Number of draws, at least 1
        seed (Optional[int]): Seed recorded in the provenance tag

    Returns:
        EmpiricalSample: One-dimensional sample
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    # Open-interval uniforms on the 2^-53 lattice
    u = (rng.integers(0, 2 ** 53, size=count) + 0.5) / 2.0 ** 53
    values = law._phi_pair(u, 1.0 - u)
    return EmpiricalSample(values, SampleProvenance('nonlinear-inverse-cdf', seed, None, count))
