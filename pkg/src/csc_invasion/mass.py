"""Total cancer mass: simulation series, plateau approximation, and the
invasion-paradox window.

The plateau approximation replaces u and v by piecewise-constant profiles
behind front positions moving at the closed-form speeds, clipped at the
right boundary:

    sigma~(tau) = min(x0 + c * tau, L)
    M_app = sigma~_sc + (1 - alpha) * (sigma~_pt - sigma~_sc)        (staged)
    M_app = min(x0 + 2 tau, L)                                (TC extinction)

In a bounded domain the alpha-derivative of M_app changes sign once the
primary TC front saturates, which is the "tumor invasion paradox" window.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .integrator import Grid1D, Observer, StateField
from .model import ModelParams, Regime, predicted_speeds

__all__ = [
    "MassSeries",
    "ParadoxWindow",
    "MassObserver",
    "total_mass",
    "approx_mass",
    "mass_sensitivity_app",
    "paradox_window",
    "empirical_mass_sensitivity",
]

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass
class MassSeries:
    """Mass time series from one run, with the run's configuration."""

    taus: np.ndarray
    mass: np.ndarray
    alpha: float
    eps: float
    x0: float
    L: float

    def to_csv(self, path, p: ModelParams | None = None) -> None:
        """CSV ``tau,mass,mass_app`` (mass_app from the run's parameters)."""
        p = p or ModelParams(self.alpha, self.eps)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["tau", "mass", "mass_app"])
            for tau, m in zip(self.taus, self.mass):
                writer.writerow(
                    [repr(float(tau)), repr(float(m)), repr(approx_mass(tau, p, self.x0, self.L))]
                )


@dataclass
class ParadoxWindow:
    """Regime-switch times of the plateau-mass alpha-derivative.

    ``tau_decreasing_until`` is the first switch time (primary-front
    saturation or the sign change of the saturated-branch derivative,
    whichever comes first); the mass is increasing in alpha from
    ``tau_increasing_from`` until ``tau_saturated_from``, when the CSC front
    also reaches the boundary and the mass freezes at L.
    """

    tau_decreasing_until: float
    tau_increasing_from: float
    tau_saturated_from: float


class MassObserver(Observer):
    """Records the trapezoid-rule total mass at a fixed cadence."""

    def __init__(self, cadence: float):
        super().__init__(cadence)
        self.taus: list[float] = []
        self.mass: list[float] = []

    def observe(self, state: StateField, grid: Grid1D) -> None:
        self.taus.append(state.time)
        self.mass.append(total_mass(state, grid))

    def series(self, p: ModelParams, x0: float, grid: Grid1D) -> MassSeries:
        return MassSeries(
            taus=np.asarray(self.taus),
            mass=np.asarray(self.mass),
            alpha=p.alpha,
            eps=p.eps,
            x0=x0,
            L=grid.length,
        )


def total_mass(state: StateField, grid: Grid1D) -> float:
    """Trapezoid-rule integral of u + v over the domain."""
    return float(_trapezoid(state.u + state.v, dx=grid.dx))


def _positions(tau: float, p: ModelParams, x0: float, L: float):
    pred = predicted_speeds(p)
    s_sc = min(x0 + pred.c_sc * tau, L)
    s_pt = min(x0 + pred.c_pt * tau, L)
    return s_sc, s_pt, pred


def approx_mass(tau: float, p: ModelParams, x0: float, L: float) -> float:
    """Plateau approximation of the total mass at time tau.

    In the TC-extinction regime the approximation keeps the x0 offset of the
    front position, M_app = min(x0 + 2 tau, L).
    """
    if tau < 0.0:
        raise ValueError("tau must be non-negative")
    pred = predicted_speeds(p)
    if pred.regime is Regime.TC_EXTINCTION:
        return min(x0 + 2.0 * tau, L)
    s_sc, s_pt, _ = _positions(tau, p, x0, L)
    return s_sc + (1.0 - p.alpha) * (s_pt - s_sc)


def mass_sensitivity_app(tau: float, p: ModelParams, x0: float, L: float) -> float:
    """Piecewise-analytic alpha-derivative of the staged-regime M_app.

    Before the primary front saturates this is (3/2)(c_sc - c_pt) * tau,
    equivalently 3 tau (sqrt(alpha) - sqrt((1-alpha)/eps)); while only the
    primary front is saturated it is x0 + 3 sqrt(alpha) tau - L; zero once
    both fronts are saturated.
    """
    pred = predicted_speeds(p)
    if pred.regime is not Regime.STAGED:
        raise ValueError("mass_sensitivity_app applies to the staged regime only")
    if x0 + pred.c_pt * tau < L:
        return 1.5 * (pred.c_sc - pred.c_pt) * tau
    if x0 + pred.c_sc * tau < L:
        return x0 + 3.0 * math.sqrt(p.alpha) * tau - L
    return 0.0


def paradox_window(p: ModelParams, x0: float, L: float) -> ParadoxWindow:
    """Switch times of the sign of d(M_app)/d(alpha) in the staged regime.

    Handles the case c_pt < 3 sqrt(alpha) (possible near the regime
    boundary), where saturation of the primary front and the sign change
    coincide at the later of the two entry times.
    """
    pred = predicted_speeds(p)
    if pred.regime is not Regime.STAGED:
        raise ValueError("paradox_window applies to the staged regime only")
    span = L - x0
    t_pt_sat = span / pred.c_pt
    t_sign = span / (3.0 * math.sqrt(p.alpha))
    return ParadoxWindow(
        tau_decreasing_until=min(t_sign, t_pt_sat),
        tau_increasing_from=max(t_sign, t_pt_sat),
        tau_saturated_from=span / pred.c_sc,
    )


def empirical_mass_sensitivity(series: list[MassSeries]):
    """Central finite differences of simulated mass in alpha at each tau.

    Needs at least three series on a shared tau grid; returns
    (taus, interior_alphas, dM_dalpha) with dM_dalpha of shape
    (len(interior_alphas), len(taus)).
    """
    if len(series) < 3:
        raise ValueError("need at least 3 alpha values for central differences")
    series = sorted(series, key=lambda s: s.alpha)
    taus = series[0].taus
    for s in series[1:]:
        if s.taus.shape != taus.shape or not np.allclose(s.taus, taus, atol=1e-9):
            raise ValueError("mass series do not share a common tau grid")
    alphas = np.array([s.alpha for s in series])
    masses = np.vstack([s.mass for s in series])
    interior = alphas[1:-1]
    dm = (masses[2:] - masses[:-2]) / (alphas[2:] - alphas[:-2])[:, None]
    return taus, interior, dm
