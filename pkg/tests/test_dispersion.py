import math

import numpy as np
import pytest

from csc_invasion.dispersion import (
    InvadedState,
    dispersion_poly_nu,
    essential_spectrum_curve,
    eval_dispersion,
    find_double_root,
    linear_spreading_speed,
    pinching_test,
    state_jacobian,
    trace_root_separation,
    _det_form,
    _factored_form,
)
from csc_invasion.errors import ConvergenceError
from csc_invasion.model import ModelParams

P = ModelParams(0.75, 0.1)
C_SC = 2.0 * math.sqrt(0.75)


class TestEvalDispersion:
    def test_double_root_point_pure_tc(self):
        val = eval_dispersion(InvadedState.PURE_TC, 0.0, -math.sqrt(0.75), C_SC, P)
        assert abs(val) < 1e-12

    def test_double_root_point_cancer_free(self):
        val = eval_dispersion(InvadedState.CANCER_FREE, 0.0, -1.0, 2.0, P)
        assert abs(val) < 1e-12

    def test_direct_value(self):
        val = eval_dispersion(InvadedState.PURE_TC, 1.0, 0.0, 0.0, P)
        assert val == pytest.approx((0.75 - 1.0) * ((0.75 - 1.0) / 0.1 - 1.0), abs=1e-12)

    def test_factorization_consistency(self):
        rng = np.random.default_rng(7)
        J = state_jacobian(InvadedState.PURE_TC, P)
        for _ in range(10_000):
            lam = complex(*rng.uniform(-2.0, 2.0, 2))
            nu = complex(*rng.uniform(-2.0, 2.0, 2))
            det = _det_form(J, 1.3, lam, nu)
            fac = _factored_form(J, 1.3, lam, nu)
            assert abs(det - fac) < 1e-12


class TestDoubleRoot:
    def test_pure_tc_critical(self):
        root = find_double_root(InvadedState.PURE_TC, C_SC, P, (0.0, -0.5 * C_SC))
        assert abs(root.lam) < 1e-10
        assert abs(root.nu + math.sqrt(0.75)) < 1e-8
        assert root.multiplicity_in_nu == 2
        assert root.expansion[0].real > 0.0
        assert root.expansion[1].real < 0.0
        assert root.pinched

    def test_cancer_free_critical(self):
        p = ModelParams(1.25, 0.1)
        root = find_double_root(InvadedState.CANCER_FREE, 2.0, p, (0.0, -1.0))
        assert abs(root.lam) < 1e-10
        assert abs(root.nu + 1.0) < 1e-8
        assert root.pinched

    def test_scalar_factor_vertex(self):
        # quadratic nu^2 + c nu + alpha - lambda alone: double root at the vertex
        alpha, c = 0.6, 1.8
        J = np.array([[alpha, 0.0], [0.0, -50.0]])
        root = find_double_root(J, c, None, (alpha - 0.25 * c * c, -0.5 * c))
        assert root.nu == pytest.approx(-0.5 * c, abs=1e-9)
        assert root.lam == pytest.approx(alpha - 0.25 * c * c, abs=1e-10)

    def test_expansion_signs_across_parameters(self):
        for alpha in (0.2, 0.5, 0.8):
            for eps in (0.02, 0.1, 0.3):
                p = ModelParams(alpha, eps)
                c = 2.0 * math.sqrt(alpha)
                root = find_double_root(InvadedState.PURE_TC, c, p, (0.0, -0.5 * c))
                assert root.expansion[0].real > 0.0, (alpha, eps)
                assert root.expansion[1].real < 0.0, (alpha, eps)
                assert root.pinched


class TestPinching:
    def test_pure_tc_pinched(self):
        root = find_double_root(InvadedState.PURE_TC, C_SC, P, (0.0, -0.5 * C_SC))
        assert pinching_test(InvadedState.PURE_TC, root, C_SC, P)

    def test_scalar_toy(self):
        # d = nu^2 - lambda: roots +-sqrt(s) separate through the origin
        assert trace_root_separation(
            lambda lam: np.array([1.0, 0.0, -lam], dtype=complex), 0.0, 0.0
        )

    def test_stable_factor_root_reported(self):
        lam2 = (0.75 - 1.0) / 0.1 - 0.25 * C_SC**2
        root = find_double_root(InvadedState.PURE_TC, C_SC, P, (lam2, -0.5 * C_SC))
        assert root.lam.real == pytest.approx(lam2, abs=1e-9)
        assert isinstance(root.pinched, bool)


class TestSpreadingSpeed:
    def test_pure_tc_matches_closed_form(self):
        c_star, nu_star, eta = linear_spreading_speed(InvadedState.PURE_TC, P)
        assert abs(c_star - C_SC) < 1e-8
        assert eta == pytest.approx(math.sqrt(0.75), abs=1e-8)
        assert nu_star == pytest.approx(-math.sqrt(0.75), abs=1e-8)

    def test_cancer_free_extinction_regime(self):
        p = ModelParams(1.25, 0.1)
        c_star, _, eta = linear_spreading_speed(InvadedState.CANCER_FREE, p)
        assert c_star == pytest.approx(2.0, abs=1e-8)
        assert eta == pytest.approx(1.0, abs=1e-8)

    def test_cancer_free_v_factor_gives_primary_tc_speed(self):
        c_star, _, _ = linear_spreading_speed(InvadedState.CANCER_FREE, P, factor=1)
        assert c_star == pytest.approx(2.0 * math.sqrt(2.5), abs=1e-8)

    def test_stable_factor_bracket_failure(self):
        with pytest.raises(ConvergenceError):
            linear_spreading_speed(InvadedState.PURE_TC, P, factor=1)


class TestEssentialCurve:
    def test_first_branch_exactly_minus_k_squared(self):
        curve = essential_spectrum_curve(
            InvadedState.PURE_TC, math.sqrt(0.75), C_SC, P, k_max=2.0, n_k=801
        )
        b1, _ = curve.lambda_branches
        assert np.max(np.abs(b1 - (-(curve.k_samples**2)))) < 1e-12

    def test_second_branch_real_part(self):
        curve = essential_spectrum_curve(
            InvadedState.PURE_TC, math.sqrt(0.75), C_SC, P, k_max=2.0, n_k=801
        )
        _, b2 = curve.lambda_branches
        expected = -(curve.k_samples**2) - 0.75 + (0.75 - 1.0) / 0.1
        assert np.max(np.abs(b2.real - expected)) < 1e-12

    def test_marginal_only_at_origin(self):
        curve = essential_spectrum_curve(
            InvadedState.PURE_TC, math.sqrt(0.75), C_SC, P, k_max=3.0, n_k=1201
        )
        assert curve.max_re <= 1e-12
        assert curve.only_origin_marginal
        mid = curve.k_samples.size // 2
        assert abs(curve.lambda_branches[0][mid]) < 1e-14  # k = 0 touches the origin

    def test_poly_matches_det(self):
        J = state_jacobian(InvadedState.PURE_TC, P)
        rng = np.random.default_rng(3)
        for _ in range(100):
            lam = complex(*rng.uniform(-1, 1, 2))
            nu = complex(*rng.uniform(-1, 1, 2))
            poly = dispersion_poly_nu(J, C_SC, lam)
            assert np.polyval(poly, nu) == pytest.approx(
                _det_form(J, C_SC, lam, nu), abs=1e-12
            )
