import math

import numpy as np
import pytest

from csc_invasion.model import (
    EquilibriumKind,
    JacobianForm,
    ModelParams,
    Regime,
    Stability,
    equilibria,
    jacobian,
    kpp_condition_report,
    normal_hyperbolicity_bound,
    predicted_speeds,
    reaction_f,
    reaction_g,
    reduced_f,
    reduced_f_prime,
    slow_manifold_v,
)

P = ModelParams(0.75, 0.1)


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            ModelParams(alpha=-0.1, eps=0.1)
        with pytest.raises(ValueError):
            ModelParams(alpha=0.0, eps=0.1)
        with pytest.raises(ValueError):
            ModelParams(alpha=0.5, eps=0.0)
        with pytest.raises(ValueError):
            ModelParams(alpha=0.5, eps=1.0)
        ModelParams(alpha=1.0, eps=0.5)  # alpha = 1 exactly is accepted


class TestReactions:
    def test_f_zero_at_u_zero(self):
        assert reaction_f(0.0, 0.3) == 0.0

    def test_f_zero_at_pure_csc(self):
        assert reaction_f(1.0, 0.0) == 0.0

    def test_f_direct_value(self):
        assert reaction_f(0.5, 0.25) == pytest.approx(0.125, abs=1e-15)

    def test_g_zero_at_pure_tc(self):
        for alpha in (0.25, 0.75, 0.95):
            p = ModelParams(alpha, 0.1)
            assert reaction_g(0.0, 1.0 - alpha, p) == pytest.approx(0.0, abs=1e-15)

    def test_g_on_manifold_at_delta_zero(self):
        p = ModelParams(0.75, 0.1)
        assert reaction_g(0.5, 0.25, p, at_delta_zero=True) == pytest.approx(0.0, abs=1e-15)

    def test_g_zero_at_pure_csc(self):
        assert reaction_g(1.0, 0.0, P) == 0.0


class TestJacobian:
    def test_origin_divided(self):
        J = jacobian(0.0, 0.0, P)
        assert J[0, 0] == pytest.approx(1.0)
        assert J[0, 1] == 0.0
        assert J[1, 0] == pytest.approx((1.0 - 0.1) / 0.1)
        assert J[1, 1] == pytest.approx((1.0 - 0.75) / 0.1)

    def test_pure_tc_entry_21(self):
        J = jacobian(0.0, 1.0 - 0.75, P)
        assert J[1, 0] == pytest.approx(((2.0 - 0.1) * 0.75 - 1.0) / 0.1)

    def test_pure_tc_entry_12_vanishes(self):
        J = jacobian(0.0, 1.0 - 0.75, P)
        assert J[0, 1] == 0.0

    def test_weighted_pair(self):
        J, K = jacobian(0.3, 0.2, P, JacobianForm.WEIGHTED)
        Jdiv = jacobian(0.3, 0.2, P)
        assert np.allclose(K, np.diag([1.0, 0.1]))
        assert np.allclose(J[0], Jdiv[0])
        assert np.allclose(J[1] / 0.1, Jdiv[1])


class TestEquilibria:
    def test_three_states(self):
        eqs = equilibria(P)
        assert [e.kind for e in eqs] == [
            EquilibriumKind.CANCER_FREE,
            EquilibriumKind.PURE_TC,
            EquilibriumKind.PURE_CSC,
        ]

    def test_pure_tc_unstable_below_one(self):
        eqs = {e.kind: e for e in equilibria(P)}
        tc = eqs[EquilibriumKind.PURE_TC]
        assert tc.u == 0.0 and tc.v == pytest.approx(0.25)
        assert tc.stability is Stability.UNSTABLE

    def test_pure_tc_not_physical_above_one(self):
        eqs = {e.kind: e for e in equilibria(ModelParams(1.25, 0.1))}
        assert eqs[EquilibriumKind.PURE_TC].stability is Stability.NOT_PHYSICAL

    def test_pure_csc_stable(self):
        for alpha in (0.3, 0.75, 1.25):
            eqs = {e.kind: e for e in equilibria(ModelParams(alpha, 0.1))}
            csc = eqs[EquilibriumKind.PURE_CSC]
            assert (csc.u, csc.v) == (1.0, 0.0)
            assert csc.stability is Stability.STABLE


class TestSlowManifold:
    def test_endpoint_values(self):
        assert slow_manifold_v(0.0, 0.75) == pytest.approx(0.25, abs=1e-15)
        for alpha in (0.25, 0.75, 1.25, 1.5):
            assert slow_manifold_v(1.0, alpha) == pytest.approx(0.0, abs=1e-14)
        # plus branch handles both regimes at u = 0
        assert slow_manifold_v(0.0, 1.25) == pytest.approx(0.0, abs=1e-15)

    def test_quadratic_root(self):
        assert slow_manifold_v(0.5, 0.75) == pytest.approx(0.25, abs=1e-15)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            slow_manifold_v(-0.1, 0.75)

    def test_backsubstitution_residual(self):
        u = np.linspace(0.0, 1.0, 1000)
        for alpha in (0.25, 0.5, 0.75, 1.25, 1.5):
            p = ModelParams(alpha, 0.1)
            v = slow_manifold_v(u, alpha)
            res = reaction_g(u, v, p, at_delta_zero=True)
            assert np.max(np.abs(res)) < 1e-12

    def test_nonnegative_on_unit_interval(self):
        u = np.linspace(0.0, 1.0, 1000)
        for alpha in (0.25, 0.5, 0.75, 1.25, 1.5):
            assert np.min(slow_manifold_v(u, alpha)) >= 0.0

    def test_gv_negative_above_bound(self):
        # on the manifold g_v = 1 - alpha - 2(u + v) = -sqrt((1-alpha)^2 + 4 alpha u)
        for alpha in (0.3, 0.75, 1.25):
            bound = normal_hyperbolicity_bound(alpha)
            u = np.linspace(0.5 * bound, 1.0, 500)
            v = slow_manifold_v(u, alpha)
            gv = 1.0 - alpha - 2.0 * (u + v)
            expected = -np.sqrt((1.0 - alpha) ** 2 + 4.0 * alpha * u)
            assert np.allclose(gv, expected, atol=1e-12)
            assert np.all(gv[u > bound] < 0.0)


class TestNormalHyperbolicityBound:
    def test_values(self):
        assert normal_hyperbolicity_bound(1.0) == 0.0
        assert normal_hyperbolicity_bound(0.75) == pytest.approx(-1.0 / 48.0)
        assert normal_hyperbolicity_bound(0.5) == pytest.approx(-0.125)

    def test_alpha_zero_rejected(self):
        with pytest.raises(ValueError):
            normal_hyperbolicity_bound(0.0)


class TestSpeeds:
    def test_staged_values(self):
        pred = predicted_speeds(P)
        assert pred.c_pt == pytest.approx(2.0 * math.sqrt(2.5))
        assert pred.c_sc == pytest.approx(math.sqrt(3.0))
        assert pred.regime is Regime.STAGED
        assert pred.eta_pt == pytest.approx(0.5 * pred.c_pt)
        assert pred.eta_sc == pytest.approx(math.sqrt(0.75))

    def test_extinction_regime(self):
        pred = predicted_speeds(ModelParams(1.25, 0.1))
        assert pred.c_pc == 2.0
        assert pred.eta_pc == 1.0
        assert math.isnan(pred.c_pt)
        assert pred.regime is Regime.TC_EXTINCTION

    def test_threshold_matches_speed_crossing(self):
        eps = 0.1
        alpha_star = 1.0 / (1.0 + eps)
        pred = predicted_speeds(ModelParams(alpha_star, eps))
        assert pred.c_sc == pytest.approx(pred.c_pt, rel=1e-12)

    def test_regime_iff_speed_ordering(self):
        for alpha in (0.1, 0.5, 0.85, 0.95, 1.0, 1.25):
            for eps in (0.05, 0.1, 0.3):
                pred = predicted_speeds(ModelParams(alpha, eps))
                staged = pred.regime is Regime.STAGED
                # c_sc < c_pt is False whenever c_pt is NaN or 0 (alpha >= 1)
                assert staged == bool(pred.c_sc < pred.c_pt)

    def test_alpha_one_edge(self):
        pred = predicted_speeds(ModelParams(1.0, 0.1))
        assert pred.c_pt == 0.0
        assert pred.regime is Regime.TC_EXTINCTION


class TestReducedReaction:
    def test_zeros(self):
        for alpha in (0.3, 0.75, 1.25):
            assert reduced_f(0.0, alpha) == pytest.approx(0.0, abs=1e-14)
            assert reduced_f(1.0, alpha) == pytest.approx(0.0, abs=1e-13)

    def test_slope_at_zero(self):
        assert reduced_f_prime(0.0, 0.75) == pytest.approx(0.75, abs=1e-6)
        assert reduced_f_prime(0.0, 1.25) == pytest.approx(1.0, abs=1e-6)

    def test_slope_at_one_negative(self):
        for alpha in (0.2, 0.5, 0.8):
            assert reduced_f_prime(1.0, alpha) < 0.0

    def test_kpp_condition(self):
        for alpha in (0.25, 0.5, 0.75):
            report = kpp_condition_report(alpha)
            assert report["standard_holds"]
            assert report["max_excess"] <= 1e-10
            # the derivative-form variant fails at u = 0 where f~'(0) > 0
            assert not report["printed_holds"]
            assert report["slope0"] == pytest.approx(alpha, abs=1e-6)
