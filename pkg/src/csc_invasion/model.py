"""Algebraic core of the two-component CSC/TC invasion model.

The rescaled model couples a cancer-stem-cell density u and a tumor-cell
density v:

    u_t = u_xx + (1 - u - v) u
    eps * v_t = eps * v_xx + (1 - eps)(1 - u - v) u + (1 - u - v) v - alpha * v

This module holds the reaction terms, Jacobians, spatially constant
equilibria, the slow-manifold graph v = v_alpha(u), regime classification,
and the closed-form front-speed predictions.  Everything here is a pure
function of value types and safe for unrestricted concurrent use.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EquilibriumKind",
    "Stability",
    "Regime",
    "JacobianForm",
    "ModelParams",
    "Equilibrium",
    "SpeedPrediction",
    "reaction_f",
    "reaction_g",
    "jacobian",
    "equilibria",
    "slow_manifold_v",
    "normal_hyperbolicity_bound",
    "predicted_speeds",
    "reduced_f",
    "reduced_f_prime",
    "kpp_condition_report",
]

# Step for one-code-path central finite differences of the reduced reaction.
FD_STEP = 1e-6


class EquilibriumKind(enum.Enum):
    CANCER_FREE = "cancer_free"
    PURE_TC = "pure_tc"
    PURE_CSC = "pure_csc"


class Stability(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    NOT_PHYSICAL = "not_physical"


class Regime(enum.Enum):
    STAGED = "staged"
    TC_EXTINCTION = "tc_extinction"


class JacobianForm(enum.Enum):
    DIVIDED_BY_EPS = "divided_by_eps"
    WEIGHTED = "weighted"


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: TC death rate ``alpha`` and CSC self-renewal scale ``eps``.

    Both are dimensionless.  ``eps`` must lie in (0, 1) and ``alpha`` must be
    positive; construction fails otherwise.
    """

    alpha: float
    eps: float

    def __post_init__(self):
        if not (isinstance(self.alpha, (int, float)) and self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a positive finite real, got {self.alpha!r}")
        if not (isinstance(self.eps, (int, float)) and 0.0 < self.eps < 1.0):
            raise ValueError(f"eps must lie in (0, 1), got {self.eps!r}")


@dataclass(frozen=True)
class Equilibrium:
    kind: EquilibriumKind
    u: float
    v: float
    stability: Stability


@dataclass(frozen=True)
class SpeedPrediction:
    """Closed-form invasion speeds and leading-edge decay rates.

    ``c_pt`` is the primary TC speed 2*sqrt((1-alpha)/eps) (NaN for alpha > 1,
    0 at alpha = 1), ``c_sc`` the secondary CSC speed 2*sqrt(alpha), and
    ``c_pc`` the primary CSC speed 2.  Each decay rate is half the speed.
    """

    c_pt: float
    c_sc: float
    c_pc: float
    eta_pt: float
    eta_sc: float
    eta_pc: float
    regime: Regime


def reaction_f(u, v):
    """CSC growth term u(1 - u - v)."""
    return u * (1.0 - u - v)


def reaction_g(u, v, p: ModelParams, at_delta_zero: bool = False):
    """TC production/growth/death term.

    With ``at_delta_zero`` the eps-proportional part of the CSC-to-TC
    production is dropped, which is the reaction whose zero set defines the
    slow manifold.
    """
    shared = 1.0 - u - v
    eps = 0.0 if at_delta_zero else p.eps
    return (1.0 - eps) * shared * u + shared * v - p.alpha * v


def jacobian(u, v, p: ModelParams, form: JacobianForm = JacobianForm.DIVIDED_BY_EPS):
    """Jacobian of the reaction pair at (u, v).

    ``DIVIDED_BY_EPS`` returns the 2x2 Jacobian of (f, g/eps), the form in
    which both equations carry unit diffusion.  ``WEIGHTED`` returns the pair
    ``(J, K)`` with J the Jacobian of (f, g) and K = diag(1, eps) the mass
    matrix of the generalized eigenvalue problem.

    Accepts scalars or equally shaped arrays; array inputs yield entry arrays
    stacked along the leading 2x2 axes.
    """
    f_u = 1.0 - 2.0 * u - v
    f_v = -u + 0.0 * v  # broadcast to common shape
    g_u = (1.0 - p.eps) * (1.0 - 2.0 * u - v) - v
    g_v = -(1.0 - p.eps) * u + 1.0 - u - 2.0 * v - p.alpha
    if form is JacobianForm.DIVIDED_BY_EPS:
        return np.array([[f_u, f_v], [g_u / p.eps, g_v / p.eps]])
    if form is JacobianForm.WEIGHTED:
        return np.array([[f_u, f_v], [g_u, g_v]]), np.diag([1.0, p.eps])
    raise ValueError(f"unknown Jacobian form {form!r}")


def equilibria(p: ModelParams) -> list[Equilibrium]:
    """The three spatially constant states: cancer-free, pure TC, pure CSC.

    The pure TC state (0, 1 - alpha) only carries a non-negative density for
    alpha < 1 and is flagged NOT_PHYSICAL at alpha >= 1.
    """
    tc_stability = Stability.UNSTABLE if p.alpha < 1.0 else Stability.NOT_PHYSICAL
    return [
        Equilibrium(EquilibriumKind.CANCER_FREE, 0.0, 0.0, Stability.UNSTABLE),
        Equilibrium(EquilibriumKind.PURE_TC, 0.0, 1.0 - p.alpha, tc_stability),
        Equilibrium(EquilibriumKind.PURE_CSC, 1.0, 0.0, Stability.STABLE),
    ]


def slow_manifold_v(u, alpha: float):
    """Non-negative branch of the slow-manifold graph v = v_alpha(u).

    Solves g(u, v; alpha, 0) = 0 for v; the "+" quadratic root is the branch
    with v_alpha(0) = max(1 - alpha, 0) and v_alpha(1) = 0, non-negative on
    [0, 1] for every alpha > 0.

    Raises ValueError when the discriminant (1-alpha)^2 + 4*alpha*u is
    negative, i.e. below the normal-hyperbolicity bound of the manifold.
    """
    disc = (1.0 - alpha) ** 2 + 4.0 * alpha * np.asarray(u, dtype=float)
    if np.any(disc < 0.0):
        raise ValueError(
            "slow manifold undefined: discriminant negative "
            f"(u below {normal_hyperbolicity_bound(alpha):.6g})"
        )
    v = 0.5 * (1.0 - alpha - 2.0 * np.asarray(u, dtype=float)) + 0.5 * np.sqrt(disc)
    return v if v.ndim else float(v)


def normal_hyperbolicity_bound(alpha: float) -> float:
    """Lower u-bound -(1-alpha)^2 / (4*alpha) for normal hyperbolicity.

    The slow manifold is normally hyperbolic strictly above this value;
    reductions restrict to u >= -(1-alpha)^2 / (8*alpha) to keep a margin.
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    return -((1.0 - alpha) ** 2) / (4.0 * alpha)


def predicted_speeds(p: ModelParams) -> SpeedPrediction:
    """Closed-form speeds and decay rates, plus the invasion-regime label.

    Staged invasion holds for alpha < 1/(1+eps), the threshold where the
    secondary CSC speed catches the primary TC speed.
    """
    alpha, eps = p.alpha, p.eps
    if alpha < 1.0:
        c_pt = 2.0 * math.sqrt((1.0 - alpha) / eps)
    elif alpha == 1.0:
        c_pt = 0.0
    else:
        c_pt = math.nan
    c_sc = 2.0 * math.sqrt(alpha)
    c_pc = 2.0
    regime = Regime.STAGED if alpha < 1.0 / (1.0 + eps) else Regime.TC_EXTINCTION
    return SpeedPrediction(
        c_pt=c_pt,
        c_sc=c_sc,
        c_pc=c_pc,
        eta_pt=0.5 * c_pt,
        eta_sc=0.5 * c_sc,
        eta_pc=1.0,
        regime=regime,
    )


def reduced_f(u, alpha: float):
    """Reduced scalar reaction f(u, v_alpha(u)) on the slow manifold."""
    return reaction_f(u, slow_manifold_v(u, alpha))


def reduced_f_prime(u, alpha: float, h: float = FD_STEP):
    """Central finite-difference derivative of the reduced reaction."""
    return (reduced_f(u + h, alpha) - reduced_f(u - h, alpha)) / (2.0 * h)


def kpp_condition_report(alpha: float, n_samples: int = 1000) -> dict:
    """Check the KPP condition of the reduced reaction on [0, 1].

    Tests the standard condition f~(u) <= f~'(0) * u (the one front selection
    needs) and separately reports the truth value of the derivative-form
    variant f~'(u) <= f~'(0) * u, which fails at u = 0 where f~'(0) > 0.

    Returns a dict with ``standard_holds``, ``printed_holds``, ``max_excess``
    (max of f~(u) - f~'(0)u, <= 0 when the condition holds) and ``slope0``.
    """
    u = np.linspace(0.0, 1.0, n_samples)
    slope0 = float(reduced_f_prime(0.0, alpha))
    excess = reduced_f(u, alpha) - slope0 * u
    deriv_excess = reduced_f_prime(u, alpha) - slope0 * u
    return {
        "standard_holds": bool(np.max(excess) <= 1e-10),
        "printed_holds": bool(np.max(deriv_excess) <= 1e-10),
        "max_excess": float(np.max(excess)),
        "slope0": slope0,
    }
