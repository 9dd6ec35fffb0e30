"""Tests for model construction, closed-form laws and the forcing terms.

The stationary autocovariances get a derived oracle: both linear models'
r(tau) must satisfy the characteristic ODE r'' + 2 gamma r' + lambda^2 r = 0
away from zero, checked by central finite differences, and the stationary
variance must agree with the long-time limit of the increment covariance
computed by the independent linear-algebra route.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specabc.errors import ModelConstructionError
from specabc.linalg import increment_covariance
from specabc.models import (
    G_NEURAL_MASS,
    G_NONE,
    G_SINE,
    MODEL_IDS,
    canonical_param_name,
    linear_part_coefficients,
    make_model,
    sigmoid_rate,
)


def autocov_ode_residual(model, tau, h=1e-4):
    r = model.analytics.autocovariance
    lam = float(model.lam[0])
    gam = float(model.gam[0])
    second = (r(tau + h) - 2.0 * r(tau) + r(tau - h)) / (h * h)
    first = (r(tau + h) - r(tau - h)) / (2.0 * h)
    return second + 2.0 * gam * first + lam * lam * r(tau)


class TestWeaklyDamped:
    def test_ids(self):
        assert MODEL_IDS == ("jrnmm", "mp1", "mp2", "mp4")

    def test_shape_and_flags(self, mp2_model):
        m = mp2_model
        assert (m.dim_d, m.dim) == (1, 2)
        assert m.is_linear and m.g_kind == G_NONE
        assert np.array_equal(m.output_weights, [1.0, 0.0])
        assert m.burn_in_time == 10.0

    def test_stationary_variance_formula(self, mp2_model):
        # sigma^2 / (4 gamma lambda^2) with (20, 1, 2)
        assert mp2_model.analytics.variance == pytest.approx(0.0025, rel=1e-15)
        assert mp2_model.analytics.mean == 0.0

    def test_autocovariance_at_zero_is_variance(self, mp2_model):
        r0 = float(mp2_model.analytics.autocovariance(0.0))
        assert r0 == pytest.approx(mp2_model.analytics.variance, rel=1e-14)

    @pytest.mark.parametrize("tau", [0.05, 0.3, 1.0, 2.5])
    def test_autocovariance_satisfies_characteristic_ode(self, mp2_model, tau):
        scale = 400.0 * mp2_model.analytics.variance
        assert abs(autocov_ode_residual(mp2_model, tau)) < 1e-4 * scale

    def test_variance_matches_longtime_increment_covariance(self, mp2_model):
        a, b = linear_part_coefficients(mp2_model)
        c_inf = increment_covariance(a, b, 50.0)
        w = mp2_model.output_weights
        assert w @ c_inf @ w == pytest.approx(mp2_model.analytics.variance, rel=1e-10)

    def test_requires_weak_damping(self):
        with pytest.raises(ModelConstructionError, match="lambda > gamma"):
            make_model("mp2", {"lambda": 1.0, "gamma": 1.0, "sigma": 2.0})

    def test_rejects_nonpositive_and_missing(self):
        with pytest.raises(ModelConstructionError):
            make_model("mp2", {"lambda": 20.0, "gamma": -1.0, "sigma": 2.0})
        with pytest.raises(ModelConstructionError, match="sigma"):
            make_model("mp2", {"lambda": 20.0, "gamma": 1.0})
        with pytest.raises(ModelConstructionError):
            make_model("mp2", {"lambda": 20.0, "gamma": 1.0, "sigma": 2.0, "mu": 1.0})


class TestCriticallyDamped:
    def test_lambda_is_tied_to_gamma(self, mp1_model):
        assert np.array_equal(mp1_model.lam, mp1_model.gam)
        assert set(mp1_model.params) == {"gamma", "sigma"}

    def test_observes_momentum(self, mp1_model):
        assert np.array_equal(mp1_model.output_weights, [0.0, 1.0])

    def test_stationary_variance_formula(self, mp1_model):
        # sigma^2 / (4 gamma) with (1, 2)
        assert mp1_model.analytics.variance == pytest.approx(1.0, rel=1e-15)

    @pytest.mark.parametrize("gam", [0.5, 1.0, 2.0])
    def test_autocovariance_crosses_zero_at_inverse_gamma(self, gam):
        m = make_model("mp1", {"gamma": gam, "sigma": 2.0})
        assert float(m.analytics.autocovariance(1.0 / gam)) == 0.0

    @pytest.mark.parametrize("tau", [0.05, 0.5, 2.0])
    def test_autocovariance_satisfies_characteristic_ode(self, mp1_model, tau):
        scale = float(mp1_model.lam[0]) ** 2 * mp1_model.analytics.variance
        assert abs(autocov_ode_residual(mp1_model, tau)) < 1e-4 * scale

    def test_variance_matches_longtime_increment_covariance(self, mp1_model):
        a, b = linear_part_coefficients(mp1_model)
        c_inf = increment_covariance(a, b, 60.0)
        w = mp1_model.output_weights
        assert w @ c_inf @ w == pytest.approx(mp1_model.analytics.variance, rel=1e-10)


class TestNonlinearOscillator:
    def test_sine_forcing(self):
        m = make_model("mp4", {"lambda": 20.0, "gamma": 1.0, "sigma": 2.0})
        assert m.g_kind == G_SINE and not m.is_linear
        assert m.analytics is None
        g = m.nonlinear_g(np.array([0.3]))
        assert g[0] == pytest.approx(-1.0e3 * math.sin(0.3), rel=1e-15)
        assert np.array_equal(m.nonlinear_g(np.array([0.0])), [0.0])


class TestJansenRit:
    def make(self, **overrides):
        params = {"sigma": 2000.0, "mu": 220.0, "C": 135.0}
        params.update(overrides)
        return make_model("jrnmm", params)

    def test_dimensions_and_blocks(self):
        m = self.make()
        assert (m.dim_d, m.dim) == (3, 6)
        assert np.array_equal(m.lam, [100.0, 100.0, 50.0])
        assert np.array_equal(m.gam, m.lam)
        assert np.array_equal(m.sig, [0.01, 2000.0, 1.0])
        assert np.array_equal(m.output_weights, [0.0, 1.0, -1.0, 0.0, 0.0, 0.0])
        assert m.burn_in_time == pytest.approx(0.2)
        assert m.g_kind == G_NEURAL_MASS

    def test_drift_matrix_corner(self):
        a, b = linear_part_coefficients(self.make())
        assert a[3, 0] == -10000.0
        assert a[5, 5] == -100.0
        assert np.array_equal(a[:3, 3:], np.eye(3))
        assert b[4, 1] == 2000.0

    def test_forcing_hand_values(self):
        m = self.make()

        def sigm(x):
            return 5.0 / (1.0 + math.exp(0.56 * (6.0 - x)))

        q = np.array([0.05, 0.2, 0.1])
        g = m.nonlinear_g(q)
        assert g[0] == pytest.approx(325.0 * sigm(0.1), rel=1e-12)
        assert g[1] == pytest.approx(325.0 * (220.0 + 0.8 * 135.0 * sigm(135.0 * 0.05)), rel=1e-12)
        assert g[2] == pytest.approx(1100.0 * 0.25 * 135.0 * sigm(0.25 * 135.0 * 0.05), rel=1e-12)

    def test_gain_aliases(self):
        via_alias = self.make(A=4.0, B=30.0)
        direct = self.make(gain_A=4.0, gain_B=30.0)
        assert via_alias.params == direct.params
        assert via_alias.params["gain_A"] == 4.0

    def test_defaults_filled(self):
        m = self.make()
        assert m.params["gain_A"] == 3.25
        assert m.params["gain_B"] == 22.0
        assert m.params["v0"] == 6.0
        assert m.params["r"] == 0.56

    def test_validation(self):
        with pytest.raises(ModelConstructionError, match="needs"):
            make_model("jrnmm", {"mu": 220.0, "C": 135.0})
        with pytest.raises(ModelConstructionError, match="does not take"):
            self.make(lambda_=3.0)
        with pytest.raises(ModelConstructionError):
            self.make(C=-135.0)


class TestSigmoidRate:
    def test_midpoint_and_saturation(self):
        assert sigmoid_rate(6.0) == pytest.approx(2.5, rel=1e-15)
        assert sigmoid_rate(1e6) == pytest.approx(5.0, rel=1e-12)
        with np.errstate(over="raise"):
            assert sigmoid_rate(-1e9) < 1e-300  # clamped exponent, no overflow

    def test_vectorized(self):
        out = sigmoid_rate(np.array([0.0, 6.0, 12.0]))
        assert out.shape == (3,)
        assert out[1] == pytest.approx(2.5)
        assert out[0] + out[2] == pytest.approx(5.0, rel=1e-12)  # symmetry about v0

    @given(
        x=st.floats(-1e5, 1e5),
        y=st.floats(-1e5, 1e5),
    )
    @settings(max_examples=200, deadline=None)
    def test_lipschitz_bound(self, x, y):
        # steepest slope of the logistic is vmax r / 4
        lhs = abs(sigmoid_rate(x) - sigmoid_rate(y))
        assert lhs <= 5.0 * 0.56 / 4.0 * abs(x - y) + 1e-12


class TestRebindingAndRegistry:
    def test_with_params_replaces_values(self, mp2_model):
        m2 = mp2_model.with_params({"sigma": 3.0})
        assert m2.params["sigma"] == 3.0
        assert m2.params["lambda"] == 20.0
        assert m2.analytics.variance == pytest.approx(9.0 / 1600.0)
        assert mp2_model.params["sigma"] == 2.0  # original untouched

    def test_with_params_keeps_free_names(self):
        m = make_model("mp2", {"lambda": 20.0, "gamma": 1.0, "sigma": 2.0}, free=("lambda",))
        assert m.with_params({"lambda": 19.0}).free_names == ("lambda",)

    def test_with_params_resolves_aliases(self):
        m = make_model("jrnmm", {"sigma": 2000.0, "mu": 220.0, "C": 135.0})
        assert m.with_params({"A": 5.0}).params["gain_A"] == 5.0

    def test_with_params_rejects_unknown(self, mp2_model):
        with pytest.raises(ModelConstructionError, match="unknown parameter"):
            mp2_model.with_params({"mu": 1.0})

    def test_make_model_unknown_id(self):
        with pytest.raises(ModelConstructionError, match="unknown model id"):
            make_model("mp3", {})

    def test_free_names_validated_and_canonical(self):
        with pytest.raises(ModelConstructionError, match="free parameter"):
            make_model("mp2", {"lambda": 20.0, "gamma": 1.0, "sigma": 2.0}, free=("mu",))
        m = make_model(
            "jrnmm", {"sigma": 2000.0, "mu": 220.0, "C": 135.0}, free=("A", "C")
        )
        assert m.free_names == ("gain_A", "C")

    def test_canonical_param_name(self):
        assert canonical_param_name("jrnmm", "A") == "gain_A"
        assert canonical_param_name("jrnmm", "mu") == "mu"
        assert canonical_param_name("mp2", "A") == "A"
