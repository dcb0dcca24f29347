"""Time integration of the rescaled CSC/TC system on a bounded 1D interval.

The v-equation is stepped in its eps-divided form v_t = v_xx + g(u, v)/eps so
both components share one uniform diffusion solve.  The default scheme is
IMEX: Crank-Nicolson diffusion (tridiagonal solves) with an explicit
predictor-corrector treatment of the reaction, second order in time.  An
explicit RK4 path exists for cross-checks.

Boundary conditions: Neumann at x = 0 (ghost-point reflection, second order)
and either homogeneous Dirichlet or Neumann at x = L, enforced exactly every
step.
"""
from __future__ import annotations

import csv
import enum
import functools
import time as _time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from .errors import IntegrationError
from .model import ModelParams, reaction_f, reaction_g

__all__ = [
    "BoundaryLeft",
    "BoundaryRight",
    "Scheme",
    "Scenario",
    "Grid1D",
    "StateField",
    "StepControl",
    "Observer",
    "SnapshotWriter",
    "RunRecord",
    "initial_step_data",
    "max_stable_dt",
    "make_step_control",
    "step",
    "integrate",
]

# Hard floor below which negative undershoots abort a run instead of being
# clipped; clipping would silently corrupt speed measurements.
NEGATIVE_TOL = 1e-8


class BoundaryLeft(enum.Enum):
    NEUMANN = "neumann"


class BoundaryRight(enum.Enum):
    DIRICHLET0 = "dirichlet0"
    NEUMANN = "neumann"


class Scheme(enum.Enum):
    IMEX_CN = "imex_cn"
    EXPLICIT_RK4 = "explicit_rk4"


class Scenario(enum.Enum):
    PRIMARY_TC = "primary_tc"
    SECONDARY_CSC = "secondary_csc"
    PRIMARY_CSC = "primary_csc"
    MASS_EXPERIMENT = "mass_experiment"


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [origin, origin + length] with n_points nodes."""

    length: float
    n_points: int
    bc_right: BoundaryRight = BoundaryRight.NEUMANN
    bc_left: BoundaryLeft = BoundaryLeft.NEUMANN
    origin: float = 0.0

    def __post_init__(self):
        if not self.length > 0.0:
            raise ValueError(f"grid length must be positive, got {self.length}")
        if self.n_points < 3:
            raise ValueError(f"need at least 3 grid points, got {self.n_points}")

    @property
    def dx(self) -> float:
        return self.length / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return self.origin + np.linspace(0.0, self.length, self.n_points)


@dataclass
class StateField:
    """Paired concentration profiles (u, v) at one time."""

    u: np.ndarray
    v: np.ndarray
    time: float

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.v.shape or self.u.ndim != 1:
            raise ValueError("u and v must be 1D arrays of equal length")
        if self.time < 0.0:
            raise ValueError(f"time must be non-negative, got {self.time}")


@dataclass(frozen=True)
class StepControl:
    """Time-step size, scheme, and safety factor.

    A control is valid for a given grid and parameters when
    ``dt <= safety * max_stable_dt(grid, p, scheme)``.
    """

    dt: float
    scheme: Scheme = Scheme.IMEX_CN
    safety: float = 0.9

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 < self.safety <= 1.0:
            raise ValueError(f"safety must lie in (0, 1], got {self.safety}")

    def validate(self, grid: Grid1D, p: ModelParams) -> None:
        bound = self.safety * max_stable_dt(grid, p, self.scheme)
        if self.dt > bound * (1.0 + 1e-12):
            raise ValueError(
                f"dt={self.dt:.3e} exceeds the stability bound "
                f"{bound:.3e} for {self.scheme.value}"
            )


def reaction_bound(p: ModelParams) -> float:
    """Coarse Lipschitz bound 4(1 + alpha + 1/eps) of the eps-divided reaction
    over the box [-0.1, 1.5]^2."""
    return 4.0 * (1.0 + p.alpha + 1.0 / p.eps)


def max_stable_dt(grid: Grid1D, p: ModelParams, scheme: Scheme) -> float:
    """Largest admissible dt (before the safety factor) for the scheme."""
    rb = reaction_bound(p)
    if scheme is Scheme.EXPLICIT_RK4:
        dx2 = grid.dx**2
        return min(0.5 * dx2, 0.5 * dx2 * p.eps, p.eps / rb)
    return p.eps / rb


def make_step_control(
    grid: Grid1D, p: ModelParams, scheme: Scheme = Scheme.IMEX_CN, safety: float = 0.9
) -> StepControl:
    """StepControl saturating the stability bound at the given safety."""
    return StepControl(dt=safety * max_stable_dt(grid, p, scheme), scheme=scheme, safety=safety)


def initial_step_data(
    grid: Grid1D, x0: float, p: ModelParams, scenario: Scenario
) -> StateField:
    """Step-function initial data for the four invasion scenarios.

    MassExperiment and PrimaryCSC start from (1, max(1-alpha, 0)) on [0, x0]
    and (0, 0) beyond.  SecondaryCSC starts from the pure CSC state on the
    left and the pure TC state on the right.  PrimaryTC keeps u identically
    zero with a TC step.
    """
    if not 0.0 < x0 < grid.length:
        raise ValueError(f"x0 must lie strictly inside (0, {grid.length}), got {x0}")
    x = grid.x
    left = x <= grid.origin + x0 + 1e-12
    u = np.zeros_like(x)
    v = np.zeros_like(x)
    one_minus_alpha = 1.0 - p.alpha
    if scenario in (Scenario.MASS_EXPERIMENT, Scenario.PRIMARY_CSC):
        u[left] = 1.0
        v[left] = max(one_minus_alpha, 0.0)
    elif scenario is Scenario.SECONDARY_CSC:
        u[left] = 1.0
        v[~left] = one_minus_alpha
    elif scenario is Scenario.PRIMARY_TC:
        v[left] = one_minus_alpha
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    return StateField(u=u, v=v, time=0.0)


def _laplacian(w: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Second-order Laplacian with ghost-point Neumann reflection; the
    Dirichlet row is zeroed (the value is pinned separately)."""
    dx2 = grid.dx**2
    out = np.empty_like(w)
    out[1:-1] = (w[:-2] - 2.0 * w[1:-1] + w[2:]) / dx2
    out[0] = 2.0 * (w[1] - w[0]) / dx2
    if grid.bc_right is BoundaryRight.NEUMANN:
        out[-1] = 2.0 * (w[-2] - w[-1]) / dx2
    else:
        out[-1] = 0.0
    return out


@functools.lru_cache(maxsize=64)
def _cn_banded(grid: Grid1D, dt: float) -> np.ndarray:
    """Banded storage of I - (dt/2) * Laplacian for solve_banded((1, 1), ...)."""
    n = grid.n_points
    r = 0.5 * dt / grid.dx**2
    ab = np.zeros((3, n))
    ab[0, 1:] = -r  # superdiagonal: entry (i, i+1)
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r  # subdiagonal: entry (i+1, i)
    ab[0, 1] = -2.0 * r  # left Neumann ghost
    if grid.bc_right is BoundaryRight.NEUMANN:
        ab[2, -2] = -2.0 * r
    else:
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
    ab.setflags(write=False)
    return ab


def _reaction_pair(u, v, p):
    return reaction_f(u, v), reaction_g(u, v, p) / p.eps


def _step_imex_cn(s: StateField, dt: float, grid: Grid1D, p: ModelParams):
    ab = _cn_banded(grid, dt)
    dth = 0.5 * dt
    dirichlet = grid.bc_right is BoundaryRight.DIRICHLET0
    base = np.empty((s.u.size, 2))
    base[:, 0] = s.u + dth * _laplacian(s.u, grid)
    base[:, 1] = s.v + dth * _laplacian(s.v, grid)
    r_u, r_v = _reaction_pair(s.u, s.v, p)

    def solve_stage(ru, rv):
        rhs = base.copy()
        rhs[:, 0] += dt * ru
        rhs[:, 1] += dt * rv
        if dirichlet:
            rhs[-1, :] = 0.0
        sol = solve_banded((1, 1), ab, rhs, overwrite_b=True, check_finite=False)
        return sol[:, 0], sol[:, 1]

    u_pred, v_pred = solve_stage(r_u, r_v)
    r_u2, r_v2 = _reaction_pair(u_pred, v_pred, p)
    return solve_stage(0.5 * (r_u + r_u2), 0.5 * (r_v + r_v2))


def _step_rk4(s: StateField, dt: float, grid: Grid1D, p: ModelParams):
    def rhs(u, v):
        du = _laplacian(u, grid) + reaction_f(u, v)
        dv = _laplacian(v, grid) + reaction_g(u, v, p) / p.eps
        if grid.bc_right is BoundaryRight.DIRICHLET0:
            du[-1] = 0.0
            dv[-1] = 0.0
        return du, dv

    u, v = s.u, s.v
    k1u, k1v = rhs(u, v)
    k2u, k2v = rhs(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v)
    k3u, k3v = rhs(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v)
    k4u, k4v = rhs(u + dt * k3u, v + dt * k3v)
    u_new = u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    v_new = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    if grid.bc_right is BoundaryRight.DIRICHLET0:
        u_new[-1] = 0.0
        v_new[-1] = 0.0
    return u_new, v_new


def step(s: StateField, ctl: StepControl, grid: Grid1D, p: ModelParams) -> StateField:
    """Advance both components by one time step.

    Raises IntegrationError on non-finite values or undershoots below the
    hard negativity floor.
    """
    if ctl.scheme is Scheme.IMEX_CN:
        u_new, v_new = _step_imex_cn(s, ctl.dt, grid, p)
    elif ctl.scheme is Scheme.EXPLICIT_RK4:
        u_new, v_new = _step_rk4(s, ctl.dt, grid, p)
    else:
        raise ValueError(f"unknown scheme {ctl.scheme!r}")
    t_new = s.time + ctl.dt
    if not (np.isfinite(u_new).all() and np.isfinite(v_new).all()):
        raise IntegrationError(
            "non-finite values during integration",
            time=t_new,
            max_abs_u=float(np.max(np.abs(u_new))),
            max_abs_v=float(np.max(np.abs(v_new))),
        )
    low = min(float(u_new.min()), float(v_new.min()))
    if low < -NEGATIVE_TOL:
        raise IntegrationError(
            f"negative undershoot {low:.3e} below -{NEGATIVE_TOL:.0e}",
            time=t_new,
            max_abs_u=float(np.max(np.abs(u_new))),
            max_abs_v=float(np.max(np.abs(v_new))),
        )
    return StateField(u=u_new, v=v_new, time=t_new)


class Observer:
    """Base class for run observers sampling at a fixed cadence.

    Subclasses implement ``observe``.  The first sample fires once the run
    time reaches the cadence, so a zero-length run produces empty series.
    """

    def __init__(self, cadence: float):
        if not cadence > 0.0:
            raise ValueError("cadence must be positive")
        self.cadence = cadence
        self._next_due = cadence

    def notify(self, state: StateField, grid: Grid1D) -> None:
        if state.time + 1e-12 >= self._next_due:
            self.observe(state, grid)
            while self._next_due <= state.time + 1e-12:
                self._next_due += self.cadence

    def observe(self, state: StateField, grid: Grid1D) -> None:
        raise NotImplementedError


class SnapshotWriter(Observer):
    """Writes CSV snapshots ``x,u,v``, one file snap_t<time>.csv per time."""

    def __init__(self, times, directory):
        self.times = sorted(float(t) for t in times)
        self.directory = Path(directory)
        self._idx = 0
        self.written: list[Path] = []

    def notify(self, state: StateField, grid: Grid1D) -> None:
        while self._idx < len(self.times) and state.time >= self.times[self._idx] - 1e-9:
            self._write(state, grid, self.times[self._idx])
            self._idx += 1

    def _write(self, state: StateField, grid: Grid1D, t_label: float) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / f"snap_t{t_label:g}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "u", "v"])
            for x, u, v in zip(grid.x, state.u, state.v):
                writer.writerow([repr(float(x)), repr(float(u)), repr(float(v))])
        self.written.append(path)

    def observe(self, state: StateField, grid: Grid1D) -> None:  # pragma: no cover
        pass


@dataclass
class RunRecord:
    """Immutable result of one integration run."""

    final_state: StateField
    params: ModelParams
    grid: Grid1D
    control: StepControl
    t_end: float
    wall_time: float
    n_steps: int
    observers: tuple = field(default_factory=tuple)


def integrate(
    initial: StateField,
    p: ModelParams,
    grid: Grid1D,
    ctl: StepControl,
    t_end: float,
    observers=(),
) -> RunRecord:
    """Repeatedly step from ``initial`` until t_end, notifying observers.

    The number of steps is ceil(t_end / dt); the final time may exceed t_end
    by less than one dt.  Observer outputs live on the observer objects and
    are returned as part of the run record.
    """
    if t_end < 0.0:
        raise ValueError("t_end must be non-negative")
    ctl.validate(grid, p)
    observers = tuple(observers)
    n_steps = int(np.ceil(t_end / ctl.dt - 1e-12)) if t_end > 0.0 else 0
    started = _time.perf_counter()
    state = initial
    for i in range(n_steps):
        state = step(state, ctl, grid, p)
        # Recompute time from the step index to avoid accumulation drift.
        state.time = (i + 1) * ctl.dt
        for obs in observers:
            obs.notify(state, grid)
    wall = _time.perf_counter() - started
    return RunRecord(
        final_state=state,
        params=p,
        grid=grid,
        control=ctl,
        t_end=state.time if n_steps else 0.0,
        wall_time=wall,
        n_steps=n_steps,
        observers=observers,
    )
