"""Level-set front extraction and speed fitting.

A front position is the rightmost crossing of a chosen level by u, v, or
u+v, linearly interpolated between grid points (invasion runs rightward into
the unstable state).  Speeds are fitted by least squares to the shift model

    sigma(t) = c * t + log_coeff * log(t) + x_inf,

where the logarithmic term is the universal pulled-front delay with
coefficient -3/(2 eta) for leading-edge decay rate eta.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .integrator import Grid1D, Observer, RunRecord, StateField
from .model import SpeedPrediction

__all__ = [
    "FrontComponent",
    "FitModel",
    "SpeedKind",
    "FrontTrace",
    "SpeedFit",
    "FrontObserver",
    "crossing_position",
    "track",
    "fit_speed",
    "bramson_check",
]


class FrontComponent(enum.Enum):
    U = "u"
    V = "v"
    SUM = "sum"


class FitModel(enum.Enum):
    LINEAR_ONLY = "linear_only"
    WITH_LOG = "with_log"


class SpeedKind(enum.Enum):
    PT = "pt"
    SC = "sc"
    PC = "pc"


def _component_values(state: StateField, component: FrontComponent) -> np.ndarray:
    if component is FrontComponent.U:
        return state.u
    if component is FrontComponent.V:
        return state.v
    return state.u + state.v


def rightmost_crossing(x: np.ndarray, w: np.ndarray, level: float) -> float | None:
    """Rightmost x where w crosses `level`, linearly interpolated; None if
    there is no crossing."""
    d = w - level
    sign_change = (d[:-1] * d[1:] < 0.0) | ((d[:-1] == 0.0) & (d[1:] != 0.0))
    idx = np.nonzero(sign_change)[0]
    if idx.size == 0:
        if np.all(d == 0.0):
            return None
        zero_hits = np.nonzero(d == 0.0)[0]
        return float(x[zero_hits[-1]]) if zero_hits.size else None
    j = int(idx[-1])
    frac = d[j] / (d[j] - d[j + 1])
    return float(x[j] + frac * (x[j + 1] - x[j]))


def crossing_position(
    state: StateField, grid: Grid1D, component: FrontComponent, level: float
) -> float | None:
    """Rightmost level crossing of the selected component, or None."""
    if not level > 0.0:
        raise ValueError("level must be positive")
    return rightmost_crossing(grid.x, _component_values(state, component), level)


class FrontObserver(Observer):
    """Records (t, rightmost crossing) during a run; skips absent crossings."""

    def __init__(self, component: FrontComponent, level: float, cadence: float):
        super().__init__(cadence)
        self.component = component
        self.level = level
        self.times: list[float] = []
        self.positions: list[float] = []

    def observe(self, state: StateField, grid: Grid1D) -> None:
        pos = crossing_position(state, grid, self.component, self.level)
        if pos is not None:
            self.times.append(state.time)
            self.positions.append(pos)


@dataclass
class FrontTrace:
    """Time series of a level-set position for one component."""

    component: FrontComponent
    level: float
    times: np.ndarray
    positions: np.ndarray
    hit_boundary_at: float | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "position"])
            for t, pos in zip(self.times, self.positions):
                writer.writerow([repr(float(t)), repr(float(pos))])


@dataclass
class SpeedFit:
    """Least-squares fit of the shift model over a time window."""

    c: float
    log_coeff: float
    x_inf: float
    window: tuple[float, float]
    rms_residual: float
    model: FitModel = FitModel.WITH_LOG

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(
                {
                    "c": self.c,
                    "log_coeff": self.log_coeff,
                    "x_inf": self.x_inf,
                    "rms_residual": self.rms_residual,
                    "window": list(self.window),
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")


def track(
    record: RunRecord, component: FrontComponent, level: float
) -> FrontTrace:
    """Assemble the trace recorded by the matching FrontObserver of a run.

    ``hit_boundary_at`` is set at the first time the position exceeds
    L - 5*dx; positions past that point are boundary-contaminated.
    """
    observer = None
    for obs in record.observers:
        if (
            isinstance(obs, FrontObserver)
            and obs.component is component
            and abs(obs.level - level) < 1e-12
        ):
            observer = obs
            break
    if observer is None:
        raise ValueError(f"run has no front observer for {component} at level {level}")
    times = np.asarray(observer.times, dtype=float)
    positions = np.asarray(observer.positions, dtype=float)
    if times.size < 20:
        raise ValueError(f"too few front samples ({times.size} < 20)")
    grid = record.grid
    cutoff = grid.origin + grid.length - 5.0 * grid.dx
    beyond = np.nonzero(positions > cutoff)[0]
    hit = float(times[beyond[0]]) if beyond.size else None
    return FrontTrace(
        component=component,
        level=level,
        times=times,
        positions=positions,
        hit_boundary_at=hit,
    )


def fit_speed(
    trace: FrontTrace,
    window: tuple[float, float],
    model: FitModel = FitModel.WITH_LOG,
) -> SpeedFit:
    """Fit sigma(t) = c t + b log(t) + x_inf over the window (b = 0 for
    LINEAR_ONLY).

    The window must lie inside the trace and before any boundary hit, and
    must contain at least 10 samples.  Log fits are best conditioned with
    t_min >= 10.
    """
    t_lo, t_hi = window
    if t_lo >= t_hi:
        raise ValueError("empty fit window")
    if t_lo < trace.times[0] - 1e-9 or t_hi > trace.times[-1] + 1e-9:
        raise ValueError(
            f"window ({t_lo}, {t_hi}) outside trace span "
            f"({trace.times[0]}, {trace.times[-1]})"
        )
    if trace.hit_boundary_at is not None and t_hi > trace.hit_boundary_at:
        raise ValueError(
            f"window end {t_hi} is past the boundary hit at {trace.hit_boundary_at}"
        )
    mask = (trace.times >= t_lo) & (trace.times <= t_hi)
    t = trace.times[mask]
    pos = trace.positions[mask]
    if t.size < 10:
        raise ValueError(f"too few samples in window ({t.size} < 10)")
    if model is FitModel.WITH_LOG:
        cols = np.column_stack((t, np.log(t), np.ones_like(t)))
    else:
        cols = np.column_stack((t, np.ones_like(t)))
    if np.linalg.matrix_rank(cols) < cols.shape[1]:
        raise ValueError("singular normal equations: degenerate fit window")
    coeffs, _, _, _ = np.linalg.lstsq(cols, pos, rcond=None)
    resid = pos - cols @ coeffs
    rms = float(np.sqrt(np.mean(resid**2)))
    if model is FitModel.WITH_LOG:
        c, log_coeff, x_inf = coeffs
    else:
        c, x_inf = coeffs
        log_coeff = 0.0
    return SpeedFit(
        c=float(c),
        log_coeff=float(log_coeff),
        x_inf=float(x_inf),
        window=(float(t_lo), float(t_hi)),
        rms_residual=rms,
        model=model,
    )


def bramson_check(fit: SpeedFit, pred: SpeedPrediction, which: SpeedKind) -> dict:
    """Relative errors of a fitted speed and log coefficient against the
    closed-form prediction and -3/(2 eta); reports numbers, no pass/fail."""
    if fit.model is not FitModel.WITH_LOG:
        raise ValueError("bramson_check needs a WITH_LOG fit")
    table = {
        SpeedKind.PT: (pred.c_pt, pred.eta_pt),
        SpeedKind.SC: (pred.c_sc, pred.eta_sc),
        SpeedKind.PC: (pred.c_pc, pred.eta_pc),
    }
    c_pred, eta = table[which]
    log_target = -1.5 / eta if eta else math.nan
    return {
        "which": which.value,
        "c_measured": fit.c,
        "c_predicted": c_pred,
        "c_rel_err": abs(fit.c - c_pred) / abs(c_pred) if c_pred else math.nan,
        "log_coeff_measured": fit.log_coeff,
        "log_coeff_target": log_target,
        "log_coeff_rel_err": abs(fit.log_coeff - log_target) / abs(log_target)
        if log_target
        else math.nan,
        "eta": eta,
    }
