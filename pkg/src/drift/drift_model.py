"""
Drift Model Module

This module represents the rank drift b on [0,1] used by every other part of
the laboratory:
- Linear and piecewise-linear drift families
- Exact antiderivative B and rank weights b_n(k)
- Validation of the equilibrium assumption (B(1) = 0, b strictly decreasing)
- Infimum ratios m-(delta), m+(delta) used by the feasibility machinery

Piecewise-linear drifts make B piecewise quadratic, so every quantity here is
evaluated in closed form per segment.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
MIDPOINT_CHECKS = 1024
RATIO_SCAN_POINTS = 1024


def _is_bool(value: Any) -> bool:
    return isinstance(value, (bool, np.bool_))


class ValidationCheck(NamedTuple):
    name: str
    value: float
    tolerance: float
    passed: bool


@dataclass
class ValidationReport:
    """
    Outcome of checking the equilibrium assumption on a drift model
    """

    passed: bool
    checks: List[ValidationCheck] = field(default_factory=list)
    message: str = ""

    def to_frame(self):
        """
        Returns:
            pd.DataFrame: One row per check, for console tables
        """
        import pandas as pd

        return pd.DataFrame([check._asdict() for check in self.checks])


class InfimumRatios(NamedTuple):
    m_minus: float
    m_plus: float


class DriftModel:
    """
    Continuous piecewise-linear drift b with diffusion coefficient sigma.

    The linear family b(u) = c(1/2 - u) is stored with its two nodes but
    evaluates B in closed form.
    """

    def __init__(self, kind: str, nodes: Sequence[Tuple[float, float]], sigma: float = None,
                 c: float = None, sigma2: float = None):
        """
        Args:
            kind (str): 'linear' or 'piecewise'
            nodes (Sequence[Tuple[float, float]]): Ordered (u, b(u)) pairs spanning [0, 1]
            sigma (float): Diffusion coefficient, nonzero
            c (float): Slope magnitude for the linear family
            sigma2 (float): Squared diffusion coefficient, kept exactly; replaces sigma when given
        """
        if kind not in ('linear', 'piecewise'):
            raise ConfigurationError(f"Unknown drift kind '{kind}'", location='model.kind')
        if (sigma is None) == (sigma2 is None):
            raise ConfigurationError("exactly one of sigma and sigma2 is required", location='model.sigma2')
        if sigma2 is not None:
            if _is_bool(sigma2) or not np.isfinite(sigma2) or sigma2 <= 0:
                raise ConfigurationError(f"sigma2 must be a positive real, got {sigma2}", location='model.sigma2')
            sigma = math.sqrt(sigma2)
        elif _is_bool(sigma) or not np.isfinite(sigma) or sigma == 0:
            raise ConfigurationError(f"sigma must be a nonzero real, got {sigma}", location='model.sigma2')

        try:
            points = np.asarray(nodes, dtype=float)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"nodes must be numeric [u, b] pairs: {e}", location='model.nodes') from e
        if points.ndim != 2 or points.shape[1] != 2 or len(points) < 2:
            raise ConfigurationError("nodes must be a list of at least two [u, b] pairs",
                                     location='model.nodes')
        if not np.all(np.isfinite(points)):
            raise ConfigurationError("nodes must be finite", location='model.nodes')

        u, b = points[:, 0], points[:, 1]
        if np.any(np.diff(u) <= 0):
            raise ConfigurationError("node abscissae must be strictly increasing", location='model.nodes')
        if u[0] != 0.0 or u[-1] != 1.0:
            raise ConfigurationError(f"nodes must span [0, 1], got [{u[0]}, {u[-1]}]",
                                     location='model.nodes')

        self.kind = kind
        self.c = c
        self.sigma = float(sigma)
        self._sigma2 = float(sigma2) if sigma2 is not None else self.sigma * self.sigma
        self._u = u
        self._b = b
        self._slopes = np.diff(b) / np.diff(u)

        widths = np.diff(u)
        pieces = 0.5 * widths * (b[:-1] + b[1:])
        self._left = np.concatenate(([0.0], np.cumsum(pieces)))
        self._right = np.concatenate((np.cumsum(pieces[::-1])[::-1], [0.0]))

    # ------------------------------------------------------------------
    # basic accessors

    @property
    def sigma2(self) -> float:
        return self._sigma2

    @property
    def nodes(self) -> np.ndarray:
        return np.column_stack((self._u, self._b))

    @property
    def b0(self) -> float:
        return float(self._b[0])

    @property
    def b1(self) -> float:
        return float(self._b[-1])

    @property
    def B1(self) -> float:
        """
        Total integral B(1), the mean drift b-bar
        """
        if self.kind == 'linear':
            return 0.0
        return float(self._left[-1])

    def describe(self) -> Dict[str, Any]:
        """
        Returns:
            Dict[str, Any]: Canonical description, in config-schema form
        """
        if self.kind == 'linear':
            return {'kind': 'linear', 'c': self.c, 'sigma2': self.sigma2}
        return {'kind': 'piecewise', 'nodes': self.nodes.tolist(), 'sigma2': self.sigma2}

    def model_hash(self) -> str:
        """
        Returns:
            str: Short sha256 digest of the canonical description
        """
        payload = json.dumps(self.describe(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def _segment(self, u: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self._u, u, side='right') - 1, 0, len(self._u) - 2)

    # ------------------------------------------------------------------
    # evaluations (vectorised over u)

    def drift(self, u):
        """
        Evaluate b(u)

        Args:
            u (float or np.ndarray): Points of [0, 1]

        Returns:
            float or np.ndarray: b(u)
        """
        u = np.asarray(u, dtype=float)
        if self.kind == 'linear':
            value = self.c * (0.5 - u)
        else:
            value = np.interp(u, self._u, self._b)
        return value if value.ndim else float(value)

    def antiderivative(self, u):
        """
        Evaluate B(u) = integral of b over [0, u], exactly

        Args:
            u (float or np.ndarray): Points of [0, 1]

        Returns:
            float or np.ndarray: B(u)
        """
        u = np.asarray(u, dtype=float)
        if self.kind == 'linear':
            value = 0.5 * self.c * u * (1.0 - u)
        else:
            j = self._segment(u)
            d = u - self._u[j]
            value = self._left[j] + d * (self._b[j] + 0.5 * self._slopes[j] * d)
        return value if value.ndim else float(value)

    def tail_antiderivative(self, u):
        """
        Evaluate -(integral of b over [u, 1]); equals B(u) when B(1) = 0
        """
        u = np.asarray(u, dtype=float)
        if self.kind == 'linear':
            value = 0.5 * self.c * u * (1.0 - u)
        else:
            j = self._segment(u)
            w = self._u[j + 1] - u
            value = -(self._right[j + 1] + w * (self._b[j + 1] - 0.5 * self._slopes[j] * w))
        return value if value.ndim else float(value)

    def reduced_antiderivative(self, u):
        """
        Evaluate H(u) = B(u) / (u(1-u)) on the closed interval [0, 1].

        H is continuous with H(0) = b(0) and H(1) = -b(1). The left half uses B,
        the right half uses the tail form, and the end segments are expanded
        so no cancellation happens near 0 or 1.

        Args:
            u (float or np.ndarray): Points of [0, 1]

        Returns:
            float or np.ndarray: H(u)
        """
        u = np.asarray(u, dtype=float)
        if self.kind == 'linear':
            value = np.full(u.shape, 0.5 * self.c)
            return value if value.ndim else float(value)

        j = self._segment(u)
        last = len(self._u) - 2
        w = 1.0 - u
        with np.errstate(divide='ignore', invalid='ignore'):
            general_left = self.antiderivative(u) / (u * w)
            general_right = self.tail_antiderivative(u) / (u * w)
            first = (self._b[0] + 0.5 * self._slopes[0] * u) / w
            final = (-self._b[-1] + 0.5 * self._slopes[-1] * w) / u
            left = np.where(j == 0, first, general_left)
            right = np.where(j == last, final, general_right)
            value = np.where(u <= 0.5, left, right)
        return value if value.ndim else float(value)

    def stable_antiderivative(self, u):
        """
        B(u) as u(1-u)H(u); relative accuracy is kept near both endpoints
        """
        u = np.asarray(u, dtype=float)
        value = u * (1.0 - u) * np.asarray(self.reduced_antiderivative(u))
        return value if value.ndim else float(value)

    def rank_weight(self, n: int, k: int) -> float:
        """
        Compute b_n(k) = n * (B(k/n) - B((k-1)/n))

        Args:
            n (int): Number of particles
            k (int): Rank, 1 <= k <= n

        Returns:
            float: Rank weight
        """
        if n < 1 or not 1 <= k <= n:
            raise ValueError(f"rank k={k} out of range for n={n}")
        return n * (self.antiderivative(k / n) - self.antiderivative((k - 1) / n))

    def rank_weights(self, n: int) -> np.ndarray:
        """
        Returns:
            np.ndarray: b_n(1..n)
        """
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        values = self.antiderivative(np.arange(n + 1) / n)
        return n * np.diff(values)

    def segment_polynomials(self) -> List[Tuple[float, float, np.ndarray]]:
        """
        B on each segment as a quadratic in the global variable u

        Returns:
            List[Tuple[float, float, np.ndarray]]: (u_left, u_right, [gamma, beta, alpha])
                with B(u) = gamma u^2 + beta u + alpha
        """
        if self.kind == 'linear':
            return [(0.0, 1.0, np.array([-0.5 * self.c, 0.5 * self.c, 0.0]))]
        pieces = []
        for j in range(len(self._u) - 1):
            uj, bj, sj = self._u[j], self._b[j], self._slopes[j]
            coefficients = np.array([
                0.5 * sj,
                bj - sj * uj,
                self._left[j] - bj * uj + 0.5 * sj * uj * uj,
            ])
            pieces.append((float(uj), float(self._u[j + 1]), coefficients))
        return pieces

    @classmethod
    def from_config(cls, block: Dict[str, Any]) -> 'DriftModel':
        """
        Build a model from the `model` configuration block

        Args:
            block (Dict[str, Any]): Keys kind, c, nodes, sigma2

        Returns:
            DriftModel: The constructed model
        """
        allowed = {'kind', 'c', 'nodes', 'sigma2'}
        unknown = set(block) - allowed
        if unknown:
            raise ConfigurationError(f"unknown keys {sorted(unknown)}", location='model')

        sigma2 = block.get('sigma2', 2.0)
        if _is_bool(sigma2) or not isinstance(sigma2, (int, float)) or sigma2 <= 0:
            raise ConfigurationError(f"sigma2 must be a positive real, got {sigma2}", location='model.sigma2')

        kind = block.get('kind', 'linear')
        if kind == 'linear':
            return make_linear_drift(block.get('c', 2.0), sigma2=sigma2)
        if kind == 'piecewise':
            if 'nodes' not in block:
                raise ConfigurationError("piecewise model requires nodes", location='model.nodes')
            return make_piecewise_linear_drift(block['nodes'], sigma2=sigma2)
        raise ConfigurationError(f"unknown drift kind '{kind}'", location='model.kind')

    def __repr__(self) -> str:
        if self.kind == 'linear':
            return f"DriftModel(linear, c={self.c}, sigma2={self.sigma2})"
        return f"DriftModel(piecewise, {len(self._u)} nodes, sigma2={self.sigma2})"


def make_linear_drift(c: float, sigma: float = None, sigma2: float = None) -> DriftModel:
    """
    Build b(u) = c(1/2 - u), for which B(u) = c u (1-u) / 2

    Args:
        c (float): Slope magnitude, positive
        sigma (float): Diffusion coefficient, nonzero
        sigma2 (float): Squared diffusion coefficient, used instead of sigma

    Returns:
        DriftModel: Linear drift model
    """
    if _is_bool(c) or not isinstance(c, (int, float)) or not np.isfinite(c) or c <= 0:
        raise ConfigurationError(f"c must be positive for a strictly decreasing drift, got {c}",
                                 location='model.c')
    return DriftModel('linear', [(0.0, 0.5 * c), (1.0, -0.5 * c)], sigma, c=float(c), sigma2=sigma2)


def make_piecewise_linear_drift(nodes: Sequence[Tuple[float, float]], sigma: float = None,
                                sigma2: float = None) -> DriftModel:
    """
    Build a continuous piecewise-linear drift through the given nodes

    Args:
        nodes (Sequence[Tuple[float, float]]): (u, b) pairs with u strictly increasing from 0 to 1
        sigma (float): Diffusion coefficient, nonzero
        sigma2 (float): Squared diffusion coefficient, used instead of sigma

    Returns:
        DriftModel: Piecewise-linear drift model
    """
    return DriftModel('piecewise', nodes, sigma, sigma2=sigma2)


def validate_assumption_E(model: DriftModel, tol: float = DEFAULT_TOLERANCE) -> ValidationReport:
    """
    Check B(1) = 0, strict decrease of b, b(0) > 0 > b(1) and B > 0 inside (0, 1).

    Failures are reported, never raised.

    Args:
        model (DriftModel): Model to check
        tol (float): Tolerance on |B(1)|

    Returns:
        ValidationReport: Per-check values and a summary message
    """
    midpoints = (np.arange(MIDPOINT_CHECKS) + 0.5) / MIDPOINT_CHECKS
    grid = np.union1d(model.nodes[:, 0], midpoints)
    b_values = np.asarray(model.drift(grid))
    largest_step = float(np.max(np.diff(b_values)))
    interior = grid[(grid > 0.0) & (grid < 1.0)]
    min_B = float(np.min(model.antiderivative(interior)))

    checks = [
        ValidationCheck('|B(1)|', abs(model.B1), tol, abs(model.B1) <= tol),
        ValidationCheck('max b(u_{i+1}) - b(u_i)', largest_step, 0.0, largest_step < 0.0),
        ValidationCheck('b(0)', model.b0, 0.0, model.b0 > 0.0),
        ValidationCheck('b(1)', model.b1, 0.0, model.b1 < 0.0),
        ValidationCheck('min B(u) on (0,1)', min_B, 0.0, min_B > 0.0),
    ]
    failures = {
        '|B(1)|': f"B(1) = {model.B1:.6g} is not zero (tolerance {tol:g})",
        'max b(u_{i+1}) - b(u_i)': "b not decreasing",
        'b(0)': f"b(0) = {model.b0:.6g} is not positive",
        'b(1)': f"b(1) = {model.b1:.6g} is not negative",
        'min B(u) on (0,1)': f"B is not positive on (0,1) (min {min_B:.6g})",
    }
    failed = [failures[check.name] for check in checks if not check.passed]
    passed = not failed
    message = "Assumption (E) holds" if passed else "; ".join(failed)
    if not passed:
        logger.debug(f"Validation of {model!r} failed: {message}")
    return ValidationReport(passed=passed, checks=checks, message=message)


def B(model: DriftModel, u: float) -> float:
    """
    Antiderivative B(u) of the drift

    Args:
        model (DriftModel): Drift model
        u (float): Point of [0, 1]

    Returns:
        float: B(u)
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u}")
    return model.antiderivative(u)


def b_n(model: DriftModel, n: int, k: int) -> float:
    """
    Rank weight b_n(k) = n * integral of b over [(k-1)/n, k/n]
    """
    return model.rank_weight(n, k)


def _ratio_candidates(model: DriftModel, lo: float, hi: float, towards_one: bool) -> np.ndarray:
    """
    Points where B(u)/u (or B(u)/(1-u)) can be minimal on [lo, hi]: interval ends,
    drift nodes, per-segment stationary points and a uniform scan.
    """
    candidates = [np.array([lo, hi]), np.linspace(lo, hi, RATIO_SCAN_POINTS)]
    for left, right, (gamma, beta, alpha) in model.segment_polynomials():
        candidates.append(np.array([left, right]))
        if towards_one:
            # d/du [B/(1-u)] vanishes where -gamma u^2 + 2 gamma u + (alpha + beta) = 0
            roots = np.roots([-gamma, 2.0 * gamma, alpha + beta])
        else:
            # d/du [B/u] vanishes where gamma u^2 - alpha = 0
            roots = np.roots([gamma, 0.0, -alpha])
        roots = roots[np.isreal(roots)].real
        candidates.append(roots[(roots >= left) & (roots <= right)])
    points = np.concatenate(candidates)
    return np.unique(points[(points >= lo) & (points <= hi)])


def infimum_ratios(model: DriftModel, delta: float, return_argmin: bool = False):
    """
    Compute m-(delta) = inf over [0, 1-delta] of B(u)/u and
    m+(delta) = inf over [delta, 1] of B(u)/(1-u).

    Args:
        model (DriftModel): Validated drift model
        delta (float): Width parameter in (0, 1/2)
        return_argmin (bool): Also return the minimising points

    Returns:
        InfimumRatios or Tuple[InfimumRatios, Tuple[float, float]]
    """
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")

    lower = _ratio_candidates(model, 0.0, 1.0 - delta, towards_one=False)
    # B(u)/u = (1-u) H(u), continuous at u = 0
    lower_values = (1.0 - lower) * np.asarray(model.reduced_antiderivative(lower))
    upper = _ratio_candidates(model, delta, 1.0, towards_one=True)
    upper_values = upper * np.asarray(model.reduced_antiderivative(upper))

    i, j = int(np.argmin(lower_values)), int(np.argmin(upper_values))
    ratios = InfimumRatios(float(lower_values[i]), float(upper_values[j]))
    if return_argmin:
        return ratios, (float(lower[i]), float(upper[j]))
    return ratios
