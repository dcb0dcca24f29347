"""Shared simulation fixtures; heavier runs are session-scoped so several
test modules can reuse them."""
import numpy as np
import pytest

from csc_invasion.fronts import FrontComponent, FrontObserver
from csc_invasion.integrator import (
    BoundaryRight,
    Grid1D,
    Scenario,
    initial_step_data,
    integrate,
    make_step_control,
)
from csc_invasion.mass import MassObserver
from csc_invasion.model import ModelParams


def run_scenario(
    p,
    scenario,
    length,
    n_points,
    t_end,
    x0=10.0,
    bc_right=BoundaryRight.NEUMANN,
    fronts=(),
    cadence=0.5,
    with_mass=False,
    ctl=None,
):
    grid = Grid1D(length=length, n_points=n_points, bc_right=bc_right)
    ctl = ctl or make_step_control(grid, p)
    observers = [FrontObserver(comp, level, cadence) for comp, level in fronts]
    if with_mass:
        observers.append(MassObserver(cadence))
    initial = initial_step_data(grid, x0, p, scenario)
    record = integrate(initial, p, grid, ctl, t_end, observers)
    return record


@pytest.fixture(scope="session")
def mass_sweeps():
    """Shared-dt mass sweeps (staged and TC-extinction) on [0, 300] to tau=170."""
    import time

    from csc_invasion.integrator import Scheme, StepControl, max_stable_dt

    started = time.perf_counter()
    grid_spec = dict(length=300.0, n_points=1201, bc_right=BoundaryRight.DIRICHLET0)

    def sweep(alphas):
        grid = Grid1D(**grid_spec)
        dt = min(
            0.9 * max_stable_dt(grid, ModelParams(a, 0.1), Scheme.IMEX_CN) for a in alphas
        )
        series = []
        for a in alphas:
            p = ModelParams(a, 0.1)
            record = run_scenario(
                p, Scenario.MASS_EXPERIMENT, t_end=170.0, x0=10.0, cadence=2.0,
                with_mass=True, ctl=StepControl(dt=dt), **grid_spec,
            )
            series.append(record.observers[-1].series(p, 10.0, record.grid))
        return series

    staged = sweep([round(0.2 + 0.1 * i, 1) for i in range(7)])
    extinction = sweep([round(1.2 + 0.1 * i, 1) for i in range(7)])
    return staged, extinction, time.perf_counter() - started


@pytest.fixture(scope="session")
def mass_run_075():
    """Single mass run at alpha = 0.75 to past CSC-front saturation."""
    p = ModelParams(0.75, 0.1)
    record = run_scenario(
        p,
        Scenario.MASS_EXPERIMENT,
        length=300.0,
        n_points=1201,
        t_end=170.0,
        x0=10.0,
        bc_right=BoundaryRight.DIRICHLET0,
        cadence=2.0,
        with_mass=True,
    )
    return record.observers[-1].series(p, 10.0, record.grid)


@pytest.fixture(scope="session")
def sc_run_t100():
    """Secondary CSC invasion, alpha=0.75, eps=0.1, to tau=100."""
    p = ModelParams(0.75, 0.1)
    return run_scenario(
        p,
        Scenario.SECONDARY_CSC,
        length=250.0,
        n_points=1251,
        t_end=100.0,
        fronts=[(FrontComponent.U, 0.5)],
    )


@pytest.fixture(scope="session")
def staged_run_t40():
    """Full staged structure (mass-experiment data), alpha=0.75, to tau=40."""
    p = ModelParams(0.75, 0.1)
    return run_scenario(
        p,
        Scenario.MASS_EXPERIMENT,
        length=160.0,
        n_points=801,
        t_end=40.0,
        fronts=[(FrontComponent.U, 0.5), (FrontComponent.SUM, 0.1)],
        with_mass=True,
    )
