import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.drift.drift_model import (
    B,
    DriftModel,
    b_n,
    infimum_ratios,
    make_linear_drift,
    make_piecewise_linear_drift,
    validate_assumption_E,
)
from src.errors import ConfigurationError


class TestConstruction:

    def test_linear_closed_forms(self, logistic_model):
        assert logistic_model.drift(0.0) == pytest.approx(1.0)
        assert logistic_model.drift(1.0) == pytest.approx(-1.0)
        assert B(logistic_model, 0.5) == pytest.approx(0.25)
        assert logistic_model.sigma2 == pytest.approx(2.0)

    def test_linear_total_integral_is_zero(self, logistic_model):
        assert B(logistic_model, 1.0) == 0.0
        assert B(logistic_model, 0.0) == 0.0

    @pytest.mark.parametrize("c", [0.0, -1.0, float('nan')])
    def test_linear_rejects_nonpositive_slope(self, c):
        with pytest.raises(ConfigurationError):
            make_linear_drift(c, 1.0)

    def test_zero_sigma_is_rejected(self):
        with pytest.raises(ConfigurationError, match="sigma"):
            make_linear_drift(2.0, 0.0)

    def test_two_node_piecewise_matches_linear(self, logistic_model):
        piecewise = make_piecewise_linear_drift([(0.0, 1.0), (1.0, -1.0)], sigma2=2.0)
        u = np.linspace(0.0, 1.0, 101)
        np.testing.assert_allclose(piecewise.drift(u), logistic_model.drift(u), atol=1e-15)
        np.testing.assert_allclose(piecewise.antiderivative(u), logistic_model.antiderivative(u), atol=1e-15)
        np.testing.assert_allclose(piecewise.rank_weights(7), logistic_model.rank_weights(7), atol=1e-13)

    @pytest.mark.parametrize("nodes", [
        [(0.0, 1.0)],
        [(0.0, 1.0), (0.5, 0.0), (0.5, -1.0), (1.0, -2.0)],
        [(0.1, 1.0), (1.0, -1.0)],
        [(0.0, 1.0), (0.9, -1.0)],
        [(0.0, float('inf')), (1.0, -1.0)],
    ])
    def test_malformed_nodes(self, nodes):
        with pytest.raises(ConfigurationError):
            make_piecewise_linear_drift(nodes, 1.0)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError, match="kind"):
            DriftModel('cubic', [(0.0, 1.0), (1.0, -1.0)], 1.0)

    def test_from_config(self):
        model = DriftModel.from_config({'kind': 'piecewise', 'nodes': [[0, 1.5], [0.4, 0], [1, -1]], 'sigma2': 2})
        assert model.kind == 'piecewise'
        assert model.sigma2 == pytest.approx(2.0)
        assert validate_assumption_E(model).passed

    def test_from_config_rejects_unknown_keys(self):
        with pytest.raises(ConfigurationError, match="model"):
            DriftModel.from_config({'kind': 'linear', 'c': 2, 'slope': 1})

    def test_from_config_keeps_sigma2_exact(self):
        model = DriftModel.from_config({'kind': 'linear', 'c': 2.0, 'sigma2': 2.0})
        assert model.sigma2 == 2.0
        assert model.sigma == pytest.approx(math.sqrt(2.0), rel=1e-15)

    @pytest.mark.parametrize("sigma2", [True, False, 0, -1.0, 'two'])
    def test_from_config_rejects_bad_sigma2(self, sigma2):
        with pytest.raises(ConfigurationError) as info:
            DriftModel.from_config({'kind': 'linear', 'sigma2': sigma2})
        assert info.value.location == 'model.sigma2'

    @pytest.mark.parametrize("nodes", [
        [[0.0, 'a'], [1.0, -1.0]],
        [[0.0, 1.0], [1.0]],
        'nodes',
    ])
    def test_from_config_rejects_non_numeric_nodes(self, nodes):
        with pytest.raises(ConfigurationError) as info:
            DriftModel.from_config({'kind': 'piecewise', 'nodes': nodes, 'sigma2': 2.0})
        assert info.value.location == 'model.nodes'

    def test_sigma_and_sigma2_are_exclusive(self):
        with pytest.raises(ConfigurationError):
            make_linear_drift(2.0, 1.0, sigma2=1.0)
        with pytest.raises(ConfigurationError):
            make_linear_drift(2.0)

    def test_model_hash_is_stable(self, logistic_model):
        again = make_linear_drift(2.0, sigma2=2.0)
        assert logistic_model.model_hash() == again.model_hash()
        assert make_linear_drift(3.0, sigma2=2.0).model_hash() != again.model_hash()


class TestValidation:

    def test_linear_passes(self, logistic_model):
        report = validate_assumption_E(logistic_model, tol=1e-12)
        assert report.passed
        assert all(check.passed for check in report.checks)

    def test_asymmetric_passes(self, asymmetric_model):
        assert validate_assumption_E(asymmetric_model).passed

    def test_increasing_drift_fails(self):
        report = validate_assumption_E(make_piecewise_linear_drift([(0.0, -1.0), (1.0, 1.0)], 1.0))
        assert not report.passed
        assert "b not decreasing" in report.message

    def test_nonzero_total_integral_is_named(self):
        model = make_piecewise_linear_drift([(0.0, 1.0), (1.0, -3.0)], 1.0)
        assert model.B1 == pytest.approx(-1.0)
        report = validate_assumption_E(model)
        assert not report.passed
        assert "B(1)" in report.message

    def test_unbalanced_three_node_model_is_reported(self):
        model = make_piecewise_linear_drift([(0.0, 1.0), (0.5, 0.5), (1.0, -1.5)], 1.0)
        # 0.5 * (1 + 0.5) / 2 + 0.5 * (0.5 - 1.5) / 2
        assert model.B1 == pytest.approx(0.125)
        assert not validate_assumption_E(model).passed

    def test_report_table(self, logistic_model):
        frame = validate_assumption_E(logistic_model).to_frame()
        assert list(frame.columns) == ['name', 'value', 'tolerance', 'passed']
        assert len(frame) == 5


class TestRankWeights:

    def test_two_particles(self, logistic_model):
        assert b_n(logistic_model, 2, 1) == pytest.approx(0.5)
        assert b_n(logistic_model, 2, 2) == pytest.approx(-0.5)

    def test_single_particle(self, logistic_model):
        assert b_n(logistic_model, 1, 1) == pytest.approx(0.0)

    def test_rank_out_of_range(self, logistic_model):
        with pytest.raises(ValueError):
            b_n(logistic_model, 3, 4)
        with pytest.raises(ValueError):
            B(logistic_model, 1.5)

    @given(n=st.integers(min_value=2, max_value=500))
    @settings(max_examples=30, deadline=None)
    def test_weights_sum_to_zero_and_decrease(self, asymmetric_model, n):
        weights = asymmetric_model.rank_weights(n)
        assert abs(weights.sum()) <= 1e-12 * n
        assert np.all(np.diff(weights) < 0)

    def test_vector_matches_scalar(self, asymmetric_model):
        weights = asymmetric_model.rank_weights(9)
        assert weights[3] == pytest.approx(asymmetric_model.rank_weight(9, 4), rel=1e-14)


class TestAntiderivative:

    def test_tail_form_agrees(self, asymmetric_model):
        u = np.linspace(0.0, 1.0, 257)
        np.testing.assert_allclose(asymmetric_model.tail_antiderivative(u),
                                   asymmetric_model.antiderivative(u), atol=1e-14)

    def test_reduced_form_limits(self, asymmetric_model):
        assert asymmetric_model.reduced_antiderivative(0.0) == pytest.approx(1.5)
        assert asymmetric_model.reduced_antiderivative(1.0) == pytest.approx(1.0)

    def test_stable_form_near_endpoints(self, asymmetric_model):
        u = np.array([1e-12, 1e-6, 0.3, 0.7, 1.0 - 1e-6])
        exact = asymmetric_model.antiderivative(u)
        np.testing.assert_allclose(asymmetric_model.stable_antiderivative(u), exact, rtol=1e-9)
        # the tail of B at 1 - 1e-12 is 1e-12 * (-b(1)) to first order
        assert asymmetric_model.stable_antiderivative(1.0 - 1e-12) == pytest.approx(1e-12, rel=1e-3)

    def test_segment_polynomials_reproduce_B(self, asymmetric_model):
        for left, right, coefficients in asymmetric_model.segment_polynomials():
            u = np.linspace(left, right, 11)
            np.testing.assert_allclose(np.polyval(coefficients, u), asymmetric_model.antiderivative(u),
                                       atol=1e-14)


class TestInfimumRatios:

    def test_linear_quarter(self, logistic_model):
        ratios = infimum_ratios(logistic_model, 0.25)
        assert ratios.m_minus == pytest.approx(0.25)
        assert ratios.m_plus == pytest.approx(0.25)

    @pytest.mark.parametrize("delta", [1e-3, 1e-2, 0.1])
    def test_linear_small_delta(self, logistic_model, delta):
        assert infimum_ratios(logistic_model, delta).m_minus == pytest.approx(delta, rel=1e-9)

    def test_argmin(self, logistic_model):
        _, (u_minus, u_plus) = infimum_ratios(logistic_model, 0.25, return_argmin=True)
        assert u_minus == pytest.approx(0.75)
        assert u_plus == pytest.approx(0.25)

    def test_scan_bound(self, asymmetric_model):
        ratios = infimum_ratios(asymmetric_model, 0.1)
        u = np.linspace(0.0, 0.9, 20001)[1:]
        assert ratios.m_minus <= np.min(asymmetric_model.antiderivative(u) / u) + 1e-12
        assert ratios.m_minus > 0
        v = np.linspace(0.1, 1.0, 20001)[:-1]
        assert ratios.m_plus <= np.min(asymmetric_model.antiderivative(v) / (1 - v)) + 1e-12

    @pytest.mark.parametrize("delta", [0.0, 0.5, -0.1])
    def test_delta_out_of_range(self, logistic_model, delta):
        with pytest.raises(ValueError):
            infimum_ratios(logistic_model, delta)
