import math

import numpy as np
import pytest

from csc_invasion.fronts import (
    FitModel,
    FrontComponent,
    FrontTrace,
    SpeedKind,
    bramson_check,
    crossing_position,
    fit_speed,
    track,
)
from csc_invasion.integrator import Grid1D, StateField
from csc_invasion.model import ModelParams, predicted_speeds

P = ModelParams(0.75, 0.1)


def make_state(grid, u):
    return StateField(u, np.zeros_like(u), 0.0)


class TestCrossing:
    def test_absent(self):
        grid = Grid1D(length=10.0, n_points=101)
        s = make_state(grid, np.zeros(101))
        assert crossing_position(s, grid, FrontComponent.U, 0.5) is None

    def test_exact_step_midpoint(self):
        grid = Grid1D(length=10.0, n_points=101)
        u = np.where(grid.x <= 4.0, 1.0, 0.0)
        s = make_state(grid, u)
        pos = crossing_position(s, grid, FrontComponent.U, 0.5)
        assert pos == pytest.approx(4.0 + 0.5 * grid.dx)

    def test_sigmoid_crossing(self):
        grid = Grid1D(length=100.0, n_points=2001)
        u = 1.0 / (1.0 + np.exp(grid.x - 50.0))
        s = make_state(grid, u)
        pos = crossing_position(s, grid, FrontComponent.U, 0.5)
        assert pos == pytest.approx(50.0, abs=grid.dx)

    def test_rightmost_of_multiple(self):
        grid = Grid1D(length=10.0, n_points=1001)
        u = 0.6 * np.exp(-((grid.x - 3.0) ** 2)) + 0.6 * np.exp(-((grid.x - 7.0) ** 2))
        s = make_state(grid, u)
        pos = crossing_position(s, grid, FrontComponent.U, 0.5)
        assert pos > 7.0  # right flank of the rightmost bump

    def test_translation_equivariance(self):
        grid = Grid1D(length=100.0, n_points=1001)
        u = 1.0 / (1.0 + np.exp(grid.x - 40.0))
        pos0 = crossing_position(make_state(grid, u), grid, FrontComponent.U, 0.5)
        for k in (3, 17):
            shifted = np.roll(u, k)
            shifted[:k] = u[0]
            posk = crossing_position(make_state(grid, shifted), grid, FrontComponent.U, 0.5)
            assert posk - pos0 == pytest.approx(k * grid.dx, abs=1e-9)

    def test_sum_component(self):
        grid = Grid1D(length=10.0, n_points=101)
        s = StateField(np.full(101, 0.3), np.full(101, 0.3), 0.0)
        # constant 0.6 never crosses 0.5
        assert crossing_position(s, grid, FrontComponent.SUM, 0.5) is None


class TestFitSpeed:
    def _trace(self, times, positions):
        return FrontTrace(
            component=FrontComponent.U,
            level=0.5,
            times=np.asarray(times, dtype=float),
            positions=np.asarray(positions, dtype=float),
        )

    def test_recovers_own_model(self):
        t = np.linspace(12.0, 80.0, 150)
        sigma = 3.0 * t - 0.5 * np.log(t) + 7.0
        fit = fit_speed(self._trace(t, sigma), (12.0, 80.0), FitModel.WITH_LOG)
        assert fit.c == pytest.approx(3.0, abs=1e-9)
        assert fit.log_coeff == pytest.approx(-0.5, abs=1e-9)
        assert fit.x_inf == pytest.approx(7.0, abs=1e-9)
        assert fit.rms_residual < 1e-10

    def test_linear_only_forces_zero_log(self):
        t = np.linspace(10.0, 40.0, 60)
        fit = fit_speed(self._trace(t, 2.0 * t + 1.0), (10.0, 40.0), FitModel.LINEAR_ONLY)
        assert fit.log_coeff == 0.0
        assert fit.c == pytest.approx(2.0, abs=1e-12)

    def test_fit_idempotence(self):
        t = np.linspace(15.0, 90.0, 200)
        base = fit_speed(
            self._trace(t, 1.7 * t - 1.2 * np.log(t) + 3.3), (15.0, 90.0), FitModel.WITH_LOG
        )
        regenerated = base.c * t + base.log_coeff * np.log(t) + base.x_inf
        refit = fit_speed(self._trace(t, regenerated), (15.0, 90.0), FitModel.WITH_LOG)
        assert refit.c == pytest.approx(base.c, rel=1e-9)
        assert refit.log_coeff == pytest.approx(base.log_coeff, rel=1e-9)
        assert refit.x_inf == pytest.approx(base.x_inf, rel=1e-9)

    def test_window_validation(self):
        t = np.linspace(10.0, 50.0, 100)
        trace = self._trace(t, 2.0 * t)
        with pytest.raises(ValueError):
            fit_speed(trace, (5.0, 40.0))  # starts before the trace
        with pytest.raises(ValueError):
            fit_speed(trace, (10.0, 60.0))  # ends after the trace
        with pytest.raises(ValueError):
            fit_speed(trace, (20.0, 20.4))  # too few samples
        trace.hit_boundary_at = 30.0
        with pytest.raises(ValueError):
            fit_speed(trace, (10.0, 40.0))  # past the boundary hit


class TestTrack:
    def test_track_and_boundary_flag(self, staged_run_t40):
        trace = track(staged_run_t40, FrontComponent.SUM, 0.1)
        assert trace.times.size >= 20
        assert np.all(np.diff(trace.times) > 0)
        grid = staged_run_t40.grid
        assert np.all(trace.positions <= grid.length)
        # leading front reaches 10 + c_pt * 40 ~ 136 > L - 5 dx = 159? no: stays inside
        lead = trace.positions[-1]
        assert lead == pytest.approx(10.0 + 2.0 * math.sqrt(2.5) * 40.0, rel=0.05)

    def test_missing_observer(self, staged_run_t40):
        with pytest.raises(ValueError):
            track(staged_run_t40, FrontComponent.V, 0.37)

    def test_staged_ordering(self, staged_run_t40):
        lead = track(staged_run_t40, FrontComponent.SUM, 0.1)
        back = track(staged_run_t40, FrontComponent.U, 0.5)
        f_lead = fit_speed(lead, (20.0, 39.0), FitModel.LINEAR_ONLY)
        f_back = fit_speed(back, (20.0, 39.0), FitModel.LINEAR_ONLY)
        assert f_lead.c > f_back.c
        # and the U front lags the Sum front pointwise
        assert back.positions[-1] < lead.positions[-1]

    def test_window_robustness(self, sc_run_t100):
        trace = track(sc_run_t100, FrontComponent.U, 0.5)
        f1 = fit_speed(trace, (50.0, 99.0), FitModel.LINEAR_ONLY)
        f2 = fit_speed(trace, (75.0, 99.0), FitModel.LINEAR_ONLY)
        assert abs(f1.c - f2.c) / f2.c < 0.02

    def test_stationary_positions_constant(self):
        import csc_invasion.integrator as integ
        from csc_invasion.fronts import FrontObserver

        p = ModelParams(0.75, 0.1)
        grid = Grid1D(length=40.0, n_points=201)
        u = np.where(grid.x <= 20.0, 1.0, 0.0)
        # pure CSC plateau against cancer-free state is not stationary, but a
        # uniform field is; use the stable pure-CSC equilibrium everywhere
        # with a synthetic marker level crossing absent -> use linear profile
        # relaxation-free check: zero steps keeps positions constant.
        obs = FrontObserver(FrontComponent.U, 0.5, 0.25)
        s = StateField(u, np.zeros_like(u), 0.0)
        ctl = integ.make_step_control(grid, p)
        integ.integrate(s, p, grid, ctl, 0.0, [obs])
        assert obs.times == []


class TestBramsonCheck:
    def test_targets(self):
        pred = predicted_speeds(P)
        from csc_invasion.fronts import SpeedFit

        fit = SpeedFit(c=1.7, log_coeff=-1.7, x_inf=0.0, window=(10, 100), rms_residual=0.0)
        sc = bramson_check(fit, pred, SpeedKind.SC)
        assert sc["log_coeff_target"] == pytest.approx(-3.0 / (2.0 * math.sqrt(0.75)))
        pt = bramson_check(fit, pred, SpeedKind.PT)
        assert pt["log_coeff_target"] == pytest.approx(-3.0 / (2.0 * 0.5 * 2.0 * math.sqrt(2.5)))
        assert pt["log_coeff_target"] == pytest.approx(-0.94868, abs=1e-5)
        pc = bramson_check(fit, pred, SpeedKind.PC)
        assert pc["log_coeff_target"] == pytest.approx(-1.5)

    def test_requires_log_fit(self):
        from csc_invasion.fronts import SpeedFit

        fit = SpeedFit(
            c=1.7, log_coeff=0.0, x_inf=0.0, window=(10, 100), rms_residual=0.0,
            model=FitModel.LINEAR_ONLY,
        )
        with pytest.raises(ValueError):
            bramson_check(fit, predicted_speeds(P), SpeedKind.SC)


class TestExports:
    def test_trace_csv_and_fit_json(self, tmp_path):
        t = np.linspace(10.0, 60.0, 80)
        trace = FrontTrace(
            component=FrontComponent.U,
            level=0.5,
            times=t,
            positions=2.0 * t + 1.0,
        )
        csv_path = tmp_path / "trace.csv"
        trace.to_csv(csv_path)
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "t,position"
        assert len(lines) == 81
        fit = fit_speed(trace, (10.0, 60.0), FitModel.WITH_LOG)
        json_path = tmp_path / "fit.json"
        fit.to_json(json_path)
        import json

        payload = json.loads(json_path.read_text())
        assert set(payload) == {"c", "log_coeff", "x_inf", "rms_residual", "window"}
