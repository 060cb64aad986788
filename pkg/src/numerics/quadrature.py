"""
Quadrature Module

Tanh-sinh (double exponential) quadrature on sub-intervals of [0, 1].

The map u = a + (b - a) * expit(pi * sinh(tau)) sends the real line onto (a, b);
the integrand receives both u and 1 - u so that points extremely close to
either endpoint keep full relative precision. Integrable algebraic or
logarithmic endpoint singularities are resolved by the double exponential
decay of the transformed weights.
"""

import logging
import math
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import log_expit, logsumexp

logger = logging.getLogger(__name__)

_LOG_NEGLIGIBLE = -45.0
MAX_LOGIT = 700.0


class QuadratureResult(NamedTuple):
    value: float
    error: float
    levels: int


class TanhSinhQuadrature:
    """
    Tanh-sinh rule with step halving until the relative change falls below tolerance
    """

    def __init__(self, tolerance: float = 1e-12, max_level: int = 9,
                 initial_step: float = 0.5, initial_extent: float = 4.0, max_extent: float = 12.0):
        """
        Args:
            tolerance (float): Relative change between levels accepted as converged
            max_level (int): Maximum number of step halvings
            initial_step (float): Step in tau at level 0
            initial_extent (float): Initial truncation |tau| <= extent
            max_extent (float): Largest truncation tried for slowly decaying tails
        """
        self.tolerance = tolerance
        self.max_level = max_level
        self.initial_step = initial_step
        self.initial_extent = initial_extent
        self.max_extent = max_extent

    def _nodes(self, a: float, b: float, step: float, extent: float):
        count = int(math.ceil(extent / step))
        tau = step * np.arange(-count, count + 1)
        y = math.pi * np.sinh(tau)
        # beyond |y| = MAX_LOGIT the distance to the end point is no longer representable
        tau, y = tau[np.abs(y) <= MAX_LOGIT], y[np.abs(y) <= MAX_LOGIT]
        log_t, log_s = log_expit(y), log_expit(-y)
        width = b - a
        u = a + width * np.exp(log_t)
        w = (1.0 - b) + width * np.exp(log_s)
        log_weight = math.log(width) + log_t + log_s + np.log(math.pi * np.cosh(tau)) + math.log(step)
        return u, w, log_weight

    def _log_terms(self, log_f, a: float, b: float, step: float, extent: float) -> np.ndarray:
        u, w, log_weight = self._nodes(a, b, step, extent)
        with np.errstate(over='ignore', under='ignore', divide='ignore'):
            return np.asarray(log_f(u, w), dtype=float) + log_weight

    def _extent_for(self, log_f, a: float, b: float) -> float:
        extent = self.initial_extent
        limit = min(self.max_extent, math.asinh(MAX_LOGIT / math.pi))
        while True:
            terms = self._log_terms(log_f, a, b, self.initial_step, extent)
            peak = np.max(terms)
            if max(terms[0], terms[-1]) < peak + _LOG_NEGLIGIBLE:
                return extent
            if extent >= limit:
                logger.warning(f"Tanh-sinh tails on [{a}, {b}] still significant at |tau| = {extent}")
                return extent
            extent = min(extent + 1.0, limit)

    def integrate_log(self, log_f: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      a: float = 0.0, b: float = 1.0) -> QuadratureResult:
        """
        Integrate a positive function given through its logarithm

        Args:
            log_f (Callable): Maps (u, 1-u) arrays to log f(u)
            a (float): Left end, 0 <= a < b
            b (float): Right end, b <= 1

        Returns:
            QuadratureResult: Value, last change between levels, and levels used
        """
        extent = self._extent_for(log_f, a, b)
        step = self.initial_step
        previous = math.exp(logsumexp(self._log_terms(log_f, a, b, step, extent)))
        error = math.inf
        for level in range(1, self.max_level + 1):
            step *= 0.5
            current = math.exp(logsumexp(self._log_terms(log_f, a, b, step, extent)))
            error = abs(current - previous)
            logger.debug(f"tanh-sinh level {level}: {current!r} (change {error:.3g})")
            if error <= self.tolerance * abs(current):
                return QuadratureResult(current, error, level)
            previous = current
        return QuadratureResult(current, error, self.max_level)

    def integrate(self, f: Callable[[np.ndarray, np.ndarray], np.ndarray],
                  a: float = 0.0, b: float = 1.0, scale: float = 1.0) -> QuadratureResult:
        """
        Integrate a real function of any sign

        Args:
            f (Callable): Maps (u, 1-u) arrays to f(u)
            a (float): Left end
            b (float): Right end
            scale (float): Magnitude used for the convergence test when the integral is near 0

        Returns:
            QuadratureResult: Value, last change between levels, and levels used
        """
        def summed(step: float) -> float:
            u, w, log_weight = self._nodes(a, b, step, self.max_extent)
            with np.errstate(over='ignore', under='ignore', invalid='ignore'):
                terms = np.asarray(f(u, w), dtype=float) * np.exp(log_weight)
            return math.fsum(terms[np.isfinite(terms)])

        step = self.initial_step
        previous = summed(step)
        error = math.inf
        for level in range(1, self.max_level + 1):
            step *= 0.5
            current = summed(step)
            error = abs(current - previous)
            if error <= self.tolerance * max(abs(current), scale):
                return QuadratureResult(current, error, level)
            previous = current
        return QuadratureResult(current, error, self.max_level)

    def integrate_pieces(self, f, breakpoints: Sequence[float], log: bool = False,
                         scale: float = 1.0) -> QuadratureResult:
        """
        Integrate over [0, 1] split at the given breakpoints

        Args:
            f (Callable): Integrand (or its logarithm when log=True) of (u, 1-u)
            breakpoints (Sequence[float]): Increasing points from 0 to 1
            log (bool): Whether f returns log-values of a positive integrand
            scale (float): Magnitude for the convergence test of signed integrands

        Returns:
            QuadratureResult: Summed value, summed error and the deepest level used
        """
        results = []
        for a, b in zip(breakpoints[:-1], breakpoints[1:]):
            if log:
                results.append(self.integrate_log(f, a, b))
            else:
                results.append(self.integrate(f, a, b, scale=scale))
        return QuadratureResult(
            math.fsum(r.value for r in results),
            math.fsum(r.error for r in results),
            max(r.levels for r in results),
        )
