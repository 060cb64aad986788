import math

import numpy as np
import pytest
from scipy.special import beta

from src.numerics.quadrature import TanhSinhQuadrature


@pytest.fixture
def rule():
    return TanhSinhQuadrature(tolerance=1e-13)


def test_smooth_polynomial(rule):
    result = rule.integrate(lambda u, w: u ** 3 - 2 * u)
    assert result.value == pytest.approx(0.25 - 1.0, abs=1e-13)


def test_inverse_square_root_singularity(rule):
    result = rule.integrate(lambda u, w: 1.0 / np.sqrt(u))
    assert result.value == pytest.approx(2.0, rel=1e-11)


def test_logarithmic_singularity_at_both_ends(rule):
    result = rule.integrate(lambda u, w: np.log(u) + np.log(w))
    assert result.value == pytest.approx(-2.0, rel=1e-11)


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (-0.5, 0.2), (-0.9, -0.9), (3.0, 0.0)])
def test_log_form_beta_integrals(rule, a, b):
    result = rule.integrate_log(lambda u, w: a * np.log(u) + b * np.log(w))
    assert result.value == pytest.approx(beta(a + 1.0, b + 1.0), rel=1e-10)


def test_log_form_on_subinterval(rule):
    result = rule.integrate_log(lambda u, w: np.log(u), 0.25, 0.75)
    assert result.value == pytest.approx(0.5 * (0.75 ** 2 - 0.25 ** 2), rel=1e-12)


def test_complement_keeps_precision_near_one(rule):
    # w = 1 - u is passed directly, so (1-u)^(-0.9) resolves near u = 1
    result = rule.integrate_log(lambda u, w: -0.9 * np.log(w))
    assert result.value == pytest.approx(10.0, rel=1e-10)


def test_pieces_with_kink(rule):
    pieces = rule.integrate_pieces(lambda u, w: np.abs(u - 0.3), [0.0, 0.3, 1.0])
    assert pieces.value == pytest.approx(0.5 * (0.3 ** 2 + 0.7 ** 2), rel=1e-13)
    assert pieces.levels >= 1


def test_signed_integral_near_zero_uses_scale(rule):
    result = rule.integrate(lambda u, w: np.sin(2 * math.pi * u), scale=1.0)
    assert abs(result.value) < 1e-12


def test_log_pieces_sum(rule):
    whole = rule.integrate_log(lambda u, w: 0.5 * np.log(u))
    split = rule.integrate_pieces(lambda u, w: 0.5 * np.log(u), [0.0, 0.2, 0.6, 1.0], log=True)
    assert split.value == pytest.approx(whole.value, rel=1e-12)
