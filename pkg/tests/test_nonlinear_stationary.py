import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import expit

from src.drift.drift_model import make_piecewise_linear_drift
from src.errors import ConfigurationError, LaplaceDomainError, NumericalError
from src.numerics.quadrature import QuadratureResult
from src.numerics.estimators import mc_laplace_marginal
from src.stationary.nonlinear_stationary import (
    LOGIT_CLAMP,
    F_infinity,
    NonlinearLaw,
    absolute_moment,
    check_centering,
    density_p_infinity,
    laplace_L_infinity,
    phi,
    phi_derivative,
    sample_nonlinear,
    stationary_translation,
)

unit_points = st.floats(min_value=1e-9, max_value=1.0 - 1e-9)


class TestLogisticClosedForms:

    @pytest.mark.parametrize("r", [-0.9, -0.5, -0.1, 0.1, 0.5, 0.9])
    def test_laplace_transform(self, logistic_law, r):
        assert laplace_L_infinity(logistic_law, r) == pytest.approx(math.pi * r / math.sin(math.pi * r), rel=1e-8)

    def test_laplace_at_zero(self, logistic_law, asymmetric_law):
        assert laplace_L_infinity(logistic_law, 0.0) == 1.0
        assert laplace_L_infinity(asymmetric_law, 0.0) == 1.0

    def test_quantile_is_logit(self, logistic_law, rng):
        u = rng.uniform(0.0, 1.0, size=1000)
        np.testing.assert_allclose(phi(logistic_law, u), np.log(u / (1.0 - u)), rtol=0, atol=1e-9)

    def test_quantile_values(self, logistic_law):
        assert phi(logistic_law, 0.5) == pytest.approx(0.0, abs=1e-12)
        assert phi(logistic_law, 0.75) == pytest.approx(math.log(3.0), abs=1e-12)

    def test_centering(self, logistic_law):
        assert abs(check_centering(logistic_law)) <= 1e-10

    def test_quantile_derivative(self, logistic_law):
        assert phi_derivative(logistic_law, 0.5) == pytest.approx(4.0)
        assert phi_derivative(logistic_law, 1e-7) > 1e6

    def test_distribution_function(self, logistic_law):
        assert F_infinity(logistic_law, 0.0) == pytest.approx(0.5, abs=1e-14)
        assert F_infinity(logistic_law, math.log(3.0)) == pytest.approx(0.75, abs=1e-13)

    def test_density(self, logistic_law):
        assert density_p_infinity(logistic_law, 0.0) == pytest.approx(0.25, abs=1e-13)

    def test_second_moment(self, logistic_law):
        assert absolute_moment(logistic_law, 2.0) == pytest.approx(math.pi ** 2 / 3.0, rel=1e-8)

    def test_domain(self, logistic_law):
        assert logistic_law.domain.lower == pytest.approx(-1.0, rel=1e-15)
        assert logistic_law.domain.upper == pytest.approx(1.0, rel=1e-15)


class TestDomain:

    @pytest.mark.parametrize("r,bound", [(1.0, 'upper'), (1.5, 'upper'), (-1.0, 'lower'), (-3.0, 'lower')])
    def test_outside_names_bound(self, logistic_law, r, bound):
        with pytest.raises(LaplaceDomainError) as info:
            laplace_L_infinity(logistic_law, r)
        assert info.value.bound == bound

    def test_asymmetric_bounds(self, asymmetric_law):
        assert asymmetric_law.domain.lower == pytest.approx(-1.5)
        assert asymmetric_law.domain.upper == pytest.approx(1.0)
        assert asymmetric_law.domain.contains_pair(0.5, 0.4)
        assert not asymmetric_law.domain.contains_pair(0.6, 0.5)

    def test_invalid_model_is_rejected(self):
        with pytest.raises(ConfigurationError, match="b not decreasing"):
            NonlinearLaw(make_piecewise_linear_drift([(0.0, -1.0), (1.0, 1.0)], 1.0))

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.5, float('nan')])
    def test_quantile_outside_unit_interval(self, logistic_law, u):
        with pytest.raises(ValueError):
            phi(logistic_law, u)


class TestQuantileProperties:

    @given(u1=unit_points, u2=unit_points)
    @settings(max_examples=200, deadline=None)
    def test_monotone(self, asymmetric_law, u1, u2):
        lo, hi = sorted((u1, u2))
        assume(hi - lo > 1e-9)
        assert phi(asymmetric_law, lo) < phi(asymmetric_law, hi)

    @given(u=st.floats(min_value=1e-6, max_value=1.0 - 1e-6))
    @settings(max_examples=100, deadline=None)
    def test_distribution_inverts_quantile(self, asymmetric_law, u):
        assert abs(F_infinity(asymmetric_law, phi(asymmetric_law, u)) - u) <= 1e-10

    @given(x=st.floats(min_value=-10.0, max_value=10.0))
    @settings(max_examples=100, deadline=None)
    def test_quantile_inverts_distribution(self, asymmetric_law, x):
        assert abs(phi(asymmetric_law, F_infinity(asymmetric_law, x)) - x) <= 1e-10 * (1.0 + abs(x))

    def test_table_matches_direct_quadrature(self, asymmetric_law):
        u = np.array([1e-8, 0.01, 0.2, 0.4, 0.5, 0.77, 0.999, 1.0 - 1e-8])
        np.testing.assert_allclose(phi(asymmetric_law, u), phi(asymmetric_law, u, exact=True),
                                   rtol=0, atol=1e-9)

    def test_log_asymptotics(self, logistic_law):
        u = 1e-6
        assert logistic_law.tail_exponent_0 > 0 > logistic_law.tail_exponent_1
        assert 0.9 <= phi(logistic_law, u) / (logistic_law.tail_exponent_0 * math.log(u)) <= 1.1
        assert 0.9 <= phi(logistic_law, 1.0 - u) / (logistic_law.tail_exponent_1 * math.log(u)) <= 1.1

    def test_derivative_matches_central_differences(self, asymmetric_law):
        step = 1e-5
        for u in np.linspace(0.05, 0.95, 19):
            numeric = (phi(asymmetric_law, u + step) - phi(asymmetric_law, u - step)) / (2 * step)
            assert numeric == pytest.approx(phi_derivative(asymmetric_law, u), rel=1e-6)

    def test_density_times_derivative(self, asymmetric_law):
        for u in (0.01, 0.1, 0.35, 0.5, 0.8, 0.99):
            value = density_p_infinity(asymmetric_law, phi(asymmetric_law, u)) * phi_derivative(asymmetric_law, u)
            assert value == pytest.approx(1.0, rel=1e-9)

    def test_distribution_function_on_asymmetric_law(self, asymmetric_law):
        levels = np.array([1e-6, 0.05, 0.3, 0.4, 0.5, 0.9, 1.0 - 1e-6])
        points = phi(asymmetric_law, levels)
        np.testing.assert_allclose(F_infinity(asymmetric_law, points), levels, rtol=1e-10, atol=0)
        shifted = stationary_translation(asymmetric_law, -2.0)
        assert F_infinity(shifted, points[3] - 2.0) == pytest.approx(0.4, rel=1e-10)

    def test_extreme_arguments_are_clamped(self, logistic_law):
        assert F_infinity(logistic_law, -1e3) == expit(-LOGIT_CLAMP)
        assert F_infinity(logistic_law, 1e3) == expit(LOGIT_CLAMP)
        assert F_infinity(logistic_law, 1e3) < 1.0

    def test_vector_distribution(self, logistic_law):
        x = np.array([[-1.0, 0.0], [1.0, 2.0]])
        np.testing.assert_allclose(F_infinity(logistic_law, x), 1.0 / (1.0 + np.exp(-x)), atol=1e-13)


class TestNormalisation:

    def test_density_integrates_to_one(self, logistic_law):
        total, _ = quad(lambda x: density_p_infinity(logistic_law, x), -40.0, 40.0,
                        points=[0.0], epsabs=1e-13, epsrel=1e-12, limit=200)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_asymmetric_centering(self, asymmetric_law):
        assert abs(check_centering(asymmetric_law)) <= 1e-8

    def test_translation_moves_centering(self, asymmetric_law):
        assert check_centering(stationary_translation(asymmetric_law, 1.0)) == pytest.approx(1.0, abs=1e-8)

    def test_translation_scales_transform(self, asymmetric_law):
        shifted = asymmetric_law.with_translation(0.7)
        for r in (-0.8, 0.3):
            assert laplace_L_infinity(shifted, r) == pytest.approx(
                math.exp(0.7 * r) * laplace_L_infinity(asymmetric_law, r), rel=1e-9)

    def test_log_convex(self, asymmetric_law):
        r = np.linspace(-1.3, 0.9, 23)
        logs = np.log([laplace_L_infinity(asymmetric_law, x) for x in r])
        assert np.all(logs[:-2] - 2 * logs[1:-1] + logs[2:] >= -1e-9)

    def test_first_absolute_moment_is_finite(self, asymmetric_law):
        value = absolute_moment(asymmetric_law, 1.0)
        assert 0.0 < value < math.inf

    def test_moment_order_must_be_positive(self, logistic_law):
        with pytest.raises(ValueError):
            absolute_moment(logistic_law, 0.0)

    def test_unconverged_transform_raises(self, asymmetric_law, monkeypatch):
        monkeypatch.setattr(asymmetric_law.quadrature, 'integrate_pieces',
                            lambda *args, **kwargs: QuadratureResult(1.2, 1e-6, 9))
        with pytest.raises(NumericalError, match="relative change"):
            laplace_L_infinity(asymmetric_law, 0.4)


class TestSampling:

    def test_mean_and_transform(self, logistic_law, rng):
        sample = sample_nonlinear(logistic_law, rng, 1000000, seed=20240101)
        values = sample.values()
        assert abs(values.mean()) <= 4.0 * values.std(ddof=1) / 1e3
        estimate = mc_laplace_marginal(sample, 0.3)
        assert estimate.within(0.3 * math.pi / math.sin(0.3 * math.pi), 3.0)
        assert sample.provenance.sampler == 'nonlinear-inverse-cdf'

    def test_translated_mean(self, logistic_law, rng):
        sample = sample_nonlinear(stationary_translation(logistic_law, 5.0), rng, 100000)
        values = sample.values()
        assert abs(values.mean() - 5.0) <= 4.0 * values.std(ddof=1) / math.sqrt(len(values))

    def test_seeded_draws_repeat(self, asymmetric_law):
        first = sample_nonlinear(asymmetric_law, np.random.default_rng(3), 1000).values()
        second = sample_nonlinear(asymmetric_law, np.random.default_rng(3), 1000).values()
        np.testing.assert_array_equal(first, second)

    def test_count_must_be_positive(self, logistic_law, rng):
        with pytest.raises(ValueError):
            sample_nonlinear(logistic_law, rng, 0)
