"""Configuration-driven command-line front end.

Subcommands: simulate | speeds | dispersion | tw | spectrum | mass.  Every
command reads one config file, writes machine-readable artifacts (CSV/JSON)
plus a manifest sufficient to re-run the experiment, and is deterministic:
identical configs produce byte-identical outputs.

Exit codes: 0 success, 1 numerical failure, 2 config error.  The output
directory comes from, in increasing precedence: the config [output] section,
--out, and the CSC_INVASION_OUT environment variable.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config, serialize_config
from .dispersion import (
    InvadedState,
    essential_spectrum_curve,
    find_double_root,
    linear_spreading_speed,
)
from .errors import ConfigError, ConvergenceError, IntegrationError
from .fronts import (
    FitModel,
    FrontComponent,
    FrontObserver,
    SpeedKind,
    bramson_check,
    fit_speed,
    track,
)
from .integrator import (
    BoundaryRight,
    Grid1D,
    Scenario,
    Scheme,
    SnapshotWriter,
    initial_step_data,
    integrate,
    make_step_control,
    max_stable_dt,
)
from .mass import MassObserver, approx_mass, mass_sensitivity_app, paradox_window
from .model import ModelParams, Regime, predicted_speeds
from .spectrum import build_weighted_linearization, compute_spectrum, resonance_probe
from .waves import WaveKind, default_profile_grid, solve_full_front, solve_reduced_front

__all__ = ["main"]


def _model_params(cfg: ExperimentConfig) -> ModelParams:
    return ModelParams(alpha=cfg.require("model", "alpha"), eps=cfg.require("model", "eps"))


def _grid(cfg: ExperimentConfig) -> Grid1D:
    return Grid1D(
        length=cfg.require("grid", "length"),
        n_points=cfg.require("grid", "n_points"),
        bc_right=BoundaryRight(cfg.get("grid", "bc_right", "neumann")),
    )


def _scenario(cfg: ExperimentConfig) -> Scenario:
    return Scenario(cfg.require("run", "scenario"))


def _default_fronts(scenario: Scenario, p: ModelParams, cfg: ExperimentConfig):
    """Front component/level pairs tracked by default for a scenario.

    The TC plateau can sit below 0.5, so V fronts default to (1-alpha)/2 and
    the leading-edge Sum front to 0.1.
    """
    level = cfg.get("analysis", "level")
    if scenario is Scenario.SECONDARY_CSC:
        return [(FrontComponent.U, level or 0.5)]
    if scenario is Scenario.PRIMARY_TC:
        return [(FrontComponent.V, level or 0.5 * (1.0 - p.alpha))]
    if scenario is Scenario.PRIMARY_CSC:
        return [(FrontComponent.U, level or 0.5)]
    return [(FrontComponent.U, 0.5), (FrontComponent.SUM, 0.1)]


def _speed_kind(scenario: Scenario, component: FrontComponent, p: ModelParams) -> SpeedKind:
    if scenario is Scenario.SECONDARY_CSC:
        return SpeedKind.SC
    if scenario is Scenario.PRIMARY_TC:
        return SpeedKind.PT
    if scenario is Scenario.PRIMARY_CSC:
        return SpeedKind.PC
    if predicted_speeds(p).regime is Regime.STAGED:
        return SpeedKind.SC if component is FrontComponent.U else SpeedKind.PT
    return SpeedKind.PC


def _run_scenario(cfg: ExperimentConfig, extra_observers=(), ctl=None):
    p = _model_params(cfg)
    grid = _grid(cfg)
    scenario = _scenario(cfg)
    x0 = cfg.require("run", "x0")
    t_end = cfg.require("run", "t_end")
    if ctl is None:
        ctl = make_step_control(
            grid,
            p,
            Scheme(cfg.get("run", "scheme", "imex_cn")),
            safety=cfg.get("run", "safety", 0.9),
        )
    cadence = cfg.get("run", "cadence", max(t_end / 400.0, ctl.dt))
    fronts = [
        FrontObserver(component, level, cadence)
        for component, level in _default_fronts(scenario, p, cfg)
    ]
    mass_obs = MassObserver(cadence)
    observers = fronts + [mass_obs] + list(extra_observers)
    initial = initial_step_data(grid, x0, p, scenario)
    record = integrate(initial, p, grid, ctl, t_end, observers)
    return record, p, grid, scenario, x0, fronts, mass_obs


def _fit_window(cfg: ExperimentConfig, trace):
    t_hi = cfg.get("analysis", "fit_t_max")
    t_lo = cfg.get("analysis", "fit_t_min")
    last = trace.hit_boundary_at if trace.hit_boundary_at is not None else trace.times[-1]
    if t_hi is None:
        t_hi = 0.98 * last
    if t_lo is None:
        t_lo = max(10.0, 0.5 * t_hi)
    return (t_lo, t_hi)


def _write_manifest(out_dir: Path, command: str, cfg: ExperimentConfig, artifacts, wall: float):
    echo = serialize_config(cfg)
    manifest = {
        "command": command,
        "config_echo": echo,
        "config_sha256": hashlib.sha256(echo.encode()).hexdigest(),
        "artifacts": sorted(str(a) for a in artifacts),
        "wall_time_s": round(wall, 3),
        "package_version": __version__,
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _dump_json(path: Path, payload) -> Path:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def cmd_simulate(cfg: ExperimentConfig, out_dir: Path, jobs: int = 1) -> None:
    started = time.perf_counter()
    snap_times = cfg.get("run", "snapshot_times", ())
    snapshots = SnapshotWriter(snap_times, out_dir) if snap_times else None
    extra = [snapshots] if snapshots else []
    record, p, grid, scenario, x0, fronts, mass_obs = _run_scenario(cfg, extra)
    artifacts = []
    for obs in fronts:
        trace = track(record, obs.component, obs.level)
        path = out_dir / f"trace_{obs.component.value}_{obs.level:g}.csv"
        trace.to_csv(path)
        artifacts.append(path)
    mass_path = out_dir / "mass.csv"
    mass_obs.series(p, x0, grid).to_csv(mass_path, p)
    artifacts.append(mass_path)
    if snapshots:
        artifacts.extend(snapshots.written)
    artifacts.append(
        _write_manifest(out_dir, "simulate", cfg, artifacts, time.perf_counter() - started)
    )


def cmd_speeds(cfg: ExperimentConfig, out_dir: Path, jobs: int = 1) -> None:
    started = time.perf_counter()
    record, p, grid, scenario, x0, fronts, _ = _run_scenario(cfg)
    pred = predicted_speeds(p)
    model = FitModel(cfg.get("analysis", "fit_model", "with_log"))
    results = {}
    for obs in fronts:
        trace = track(record, obs.component, obs.level)
        fit = fit_speed(trace, _fit_window(cfg, trace), model)
        kind = _speed_kind(scenario, obs.component, p)
        summary = {
            "measured": fit.c,
            "x_inf": fit.x_inf,
            "rms_residual": fit.rms_residual,
            "window": list(fit.window),
        }
        if model is FitModel.WITH_LOG:
            check = bramson_check(fit, pred, kind)
            summary.update(
                {
                    "predicted": check["c_predicted"],
                    "rel_err": check["c_rel_err"],
                    "log_coeff_predicted": check["log_coeff_target"],
                    "log_coeff_measured": check["log_coeff_measured"],
                }
            )
        else:
            table = {
                SpeedKind.PT: pred.c_pt,
                SpeedKind.SC: pred.c_sc,
                SpeedKind.PC: pred.c_pc,
            }
            c_pred = table[kind]
            summary.update(
                {
                    "predicted": c_pred,
                    "rel_err": abs(fit.c - c_pred) / c_pred if c_pred else None,
                }
            )
        results[f"{obs.component.value}@{obs.level:g}"] = summary
    payload = {
        "alpha": p.alpha,
        "eps": p.eps,
        "regime": pred.regime.value,
        "fronts": results,
    }
    artifacts = [_dump_json(out_dir / "speeds.json", payload)]
    artifacts.append(
        _write_manifest(out_dir, "speeds", cfg, artifacts, time.perf_counter() - started)
    )


def cmd_dispersion(cfg: ExperimentConfig, out_dir: Path, jobs: int = 1) -> None:
    started = time.perf_counter()
    p = _model_params(cfg)
    kind = cfg.get("analysis", "kind", "secondary_csc")
    state = InvadedState.PURE_TC if kind == "secondary_csc" else InvadedState.CANCER_FREE
    pred = predicted_speeds(p)
    c_star, nu_star, eta = linear_spreading_speed(state, p)
    root = find_double_root(state, c_star, p, (0.0, -0.5 * c_star))
    # The stable factor has its own (non-selecting) double root; report it.
    from .dispersion import state_jacobian

    J = state_jacobian(state, p)
    mu_stable = min(J[0, 0], J[1, 1])
    stable_root = find_double_root(
        state, c_star, p, (mu_stable - 0.25 * c_star**2, -0.5 * c_star)
    )
    k_max = cfg.get("analysis", "k_max", 2.0)
    n_k = cfg.get("analysis", "n_k", 401)
    curve = essential_spectrum_curve(state, eta, c_star, p, k_max, n_k)
    curve_path = out_dir / "curves.csv"
    curve.to_csv(curve_path)
    payload = {
        "state": state.value,
        "alpha": p.alpha,
        "eps": p.eps,
        "c_star_bisection": c_star,
        "c_predicted": pred.c_sc if state is InvadedState.PURE_TC else pred.c_pc,
        "eta": eta,
        "double_root": {
            "lambda": [root.lam.real, root.lam.imag],
            "nu": [root.nu.real, root.nu.imag],
            "multiplicity_in_nu": root.multiplicity_in_nu,
            "pinched": root.pinched,
            "d10": [root.expansion[0].real, root.expansion[0].imag],
            "d02": [root.expansion[1].real, root.expansion[1].imag],
        },
        "stable_factor_root": {
            "lambda": [stable_root.lam.real, stable_root.lam.imag],
            "nu": [stable_root.nu.real, stable_root.nu.imag],
            "pinched": stable_root.pinched,
        },
        "curve_max_re": curve.max_re,
        "curve_only_origin_marginal": curve.only_origin_marginal,
    }
    artifacts = [curve_path, _dump_json(out_dir / "dispersion.json", payload)]
    artifacts.append(
        _write_manifest(out_dir, "dispersion", cfg, artifacts, time.perf_counter() - started)
    )


def _profile_grid(cfg: ExperimentConfig) -> Grid1D:
    return default_profile_grid(
        dx=cfg.get("analysis", "dxi", 0.05),
        xi_min=cfg.get("analysis", "xi_min", -50.0),
        xi_max=cfg.get("analysis", "xi_max", 150.0),
    )


def _solve_profile(cfg: ExperimentConfig):
    p = _model_params(cfg)
    kind = WaveKind(cfg.get("analysis", "kind", "secondary_csc"))
    grid = _profile_grid(cfg)
    if kind is WaveKind.REDUCED_KPP:
        return solve_reduced_front(p.alpha, grid), p
    return solve_full_front(p, kind, grid), p


def cmd_tw(cfg: ExperimentConfig, out_dir: Path, jobs: int = 1) -> None:
    started = time.perf_counter()
    profile, _ = _solve_profile(cfg)
    csv_path = out_dir / "profile.csv"
    meta_path = out_dir / "profile_meta.json"
    profile.export_csv(csv_path)
    profile.export_metadata(meta_path)
    artifacts = [csv_path, meta_path]
    artifacts.append(
        _write_manifest(out_dir, "tw", cfg, artifacts, time.perf_counter() - started)
    )


def cmd_spectrum(cfg: ExperimentConfig, out_dir: Path, jobs: int = 1) -> None:
    started = time.perf_counter()
    profile, p = _solve_profile(cfg)
    from .spectrum import default_spectral_grid

    grid = default_spectral_grid(
        dx=cfg.get("analysis", "spectral_dx", 0.1),
        xi_min=cfg.get("analysis", "spectral_xi_min", -30.0),
        xi_max=cfg.get("analysis", "spectral_xi_max", 45.0),
    )
    pair = build_weighted_linearization(profile, p, grid)
    report = compute_spectrum(pair)
    spec_path = out_dir / "spectrum.csv"
    report.export_csv(spec_path)
    probe = resonance_probe(pair, 0.0)
    report_path = out_dir / "spectrum_report.json"
    report.export_json(report_path)
    with open(report_path) as fh:
        payload = json.load(fh)
    payload["resonance_probe_at_zero"] = probe
    _dump_json(report_path, payload)
    artifacts = [spec_path, report_path]
    artifacts.append(
        _write_manifest(out_dir, "spectrum", cfg, artifacts, time.perf_counter() - started)
    )


def _mass_sweep_worker(args):
    alpha, base_sections, dt_shared = args
    sections = {sec: dict(keys) for sec, keys in base_sections.items()}
    sections.setdefault("model", {})["alpha"] = alpha
    cfg = ExperimentConfig(sections=sections)
    # Sweep members share one dt so all masses sit on the same tau grid
    # (the stability bound tightens with alpha).
    from .integrator import StepControl

    ctl = StepControl(dt=dt_shared, scheme=Scheme(cfg.get("run", "scheme", "imex_cn")))
    record, p, grid, scenario, x0, _, mass_obs = _run_scenario(cfg, ctl=ctl)
    return alpha, mass_obs.series(p, x0, grid)


def cmd_mass(cfg: ExperimentConfig, out_dir: Path, jobs: int = 1) -> None:
    started = time.perf_counter()
    sweep = cfg.get("analysis", "alpha_sweep")
    if not sweep:
        raise ConfigError("cmd mass needs analysis.alpha_sweep")
    base_sections = {sec: dict(keys) for sec, keys in cfg.sections.items()}
    base_sections.setdefault("run", {}).setdefault("scenario", "mass_experiment")
    grid = _grid(cfg)
    eps = _model_params(cfg).eps
    safety = cfg.get("run", "safety", 0.9)
    scheme = Scheme(cfg.get("run", "scheme", "imex_cn"))
    dt_shared = min(
        safety * max_stable_dt(grid, ModelParams(alpha=a, eps=eps), scheme) for a in sweep
    )
    tasks = [(alpha, base_sections, dt_shared) for alpha in sweep]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_mass_sweep_worker, tasks))
    else:
        results = [_mass_sweep_worker(task) for task in tasks]
    results.sort(key=lambda item: item[0])
    artifacts = []
    series_by_alpha = {}
    for alpha, series in results:
        p_alpha = ModelParams(alpha=alpha, eps=_model_params(cfg).eps)
        path = out_dir / f"mass_alpha{alpha:g}.csv"
        series.to_csv(path, p_alpha)
        artifacts.append(path)
        series_by_alpha[alpha] = series
    # Empirical and analytic alpha-sensitivities on the shared tau grid.
    from .mass import empirical_mass_sensitivity

    series_list = [series_by_alpha[a] for a in sorted(series_by_alpha)]
    sens_path = out_dir / "sensitivity.csv"
    if len(series_list) >= 3:
        taus, interior, dm = empirical_mass_sensitivity(series_list)
        x0 = cfg.require("run", "x0")
        L = cfg.require("grid", "length")
        eps = _model_params(cfg).eps
        with open(sens_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["tau", "alpha", "dM_dalpha_emp", "dM_dalpha_app"])
            for j, alpha in enumerate(interior):
                p_alpha = ModelParams(alpha=float(alpha), eps=eps)
                staged = predicted_speeds(p_alpha).regime is Regime.STAGED
                for i, tau in enumerate(taus):
                    app = (
                        mass_sensitivity_app(float(tau), p_alpha, x0, L)
                        if staged
                        else 0.0
                    )
                    writer.writerow(
                        [repr(float(tau)), repr(float(alpha)), repr(float(dm[j, i])), repr(app)]
                    )
        artifacts.append(sens_path)
    windows = {}
    for alpha in sweep:
        p_alpha = ModelParams(alpha=alpha, eps=_model_params(cfg).eps)
        if predicted_speeds(p_alpha).regime is Regime.STAGED:
            win = paradox_window(p_alpha, cfg.require("run", "x0"), cfg.require("grid", "length"))
            windows[f"{alpha:g}"] = {
                "tau_decreasing_until": win.tau_decreasing_until,
                "tau_increasing_from": win.tau_increasing_from,
                "tau_saturated_from": win.tau_saturated_from,
            }
    artifacts.append(_dump_json(out_dir / "mass_report.json", {"paradox_windows": windows}))
    artifacts.append(
        _write_manifest(out_dir, "mass", cfg, artifacts, time.perf_counter() - started)
    )


COMMANDS = {
    "simulate": cmd_simulate,
    "speeds": cmd_speeds,
    "dispersion": cmd_dispersion,
    "tw": cmd_tw,
    "spectrum": cmd_spectrum,
    "mass": cmd_mass,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="csc-invasion",
        description="Front-speed, dispersion, traveling-wave, spectral, and "
        "mass experiments for the CSC/TC invasion model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="experiment config file")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--jobs", type=int, default=1, help="concurrent sweep members")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = os.environ.get("CSC_INVASION_OUT") or args.out or cfg.get(
            "output", "directory", "out"
        )
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out_dir, jobs=max(1, args.jobs))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, ConvergenceError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
