"""Dispersion relations, pinched double roots, and linear spreading speeds.

The linearization about a spatially constant state (u*, v*) in a frame
moving with speed c has exponential modes e^(lambda t + nu x) whose
admissible (lambda, nu) satisfy

    d(lambda, nu) = det(nu^2 D + c nu I + J - lambda I) = 0,

with J the eps-divided reaction Jacobian and D = diag(d1, d2) the diffusion
matrix (the rescaled model has D = I).  The code path is generic over any
2x2 Jacobian with diagonal diffusion; the invasion states of this model give
a triangular J, so the determinant factors into two quadratics.

The linear spreading speed is selected by a double root in nu at
Re(lambda) = 0 satisfying the pinching condition: the two colliding spatial
roots separate to opposite half-planes as lambda moves into the right half
plane.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .model import JacobianForm, ModelParams, jacobian

__all__ = [
    "InvadedState",
    "DispersionRoot",
    "SpectrumCurve",
    "state_jacobian",
    "eval_dispersion",
    "dispersion_poly_nu",
    "find_double_root",
    "pinching_test",
    "trace_root_separation",
    "linear_spreading_speed",
    "essential_spectrum_curve",
    "symbol_lambda_branches",
]

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


class InvadedState(enum.Enum):
    PURE_TC = "pure_tc"
    CANCER_FREE = "cancer_free"


@dataclass
class DispersionRoot:
    """A root (lambda, nu) of d = 0 with multiplicity and pinching metadata.

    ``expansion`` holds (d10, d02) = (d_lambda, d_nunu / 2) at the root, the
    leading coefficients of d(lambda0 + lam, nu0 + nu) ~ d10*lam + d02*nu^2.
    """

    lam: complex
    nu: complex
    multiplicity_in_nu: int
    pinched: bool
    expansion: tuple[complex, complex]


@dataclass
class SpectrumCurve:
    """Essential-spectrum branches lambda_i(k) along nu = -eta + i k."""

    eta: float
    k_samples: np.ndarray
    lambda_branches: tuple[np.ndarray, np.ndarray]
    only_origin_marginal: bool
    max_re: float

    def to_csv(self, path) -> None:
        import csv

        b1, b2 = self.lambda_branches
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["k", "re_lambda1", "im_lambda1", "re_lambda2", "im_lambda2"])
            for k, l1, l2 in zip(self.k_samples, b1, b2):
                writer.writerow(
                    [repr(float(k))]
                    + [repr(float(z)) for z in (l1.real, l1.imag, l2.real, l2.imag)]
                )


def state_jacobian(state: InvadedState, p: ModelParams) -> np.ndarray:
    """Eps-divided Jacobian at the invaded state (both states have u* = 0,
    so the Jacobian is lower triangular)."""
    if state is InvadedState.PURE_TC:
        return jacobian(0.0, 1.0 - p.alpha, p, JacobianForm.DIVIDED_BY_EPS)
    if state is InvadedState.CANCER_FREE:
        return jacobian(0.0, 0.0, p, JacobianForm.DIVIDED_BY_EPS)
    raise ValueError(f"unknown state {state!r}")


def _det_form(J, c, lam, nu, diffusion=(1.0, 1.0)):
    d1, d2 = diffusion
    a = d1 * nu * nu + c * nu + J[0, 0] - lam
    b = d2 * nu * nu + c * nu + J[1, 1] - lam
    return a * b - J[0, 1] * J[1, 0]


def _factored_form(J, c, lam, nu, diffusion=(1.0, 1.0)):
    """Product over the two lambda-branches; exact when J is triangular or
    the diffusion coefficients coincide (then the branches are m(nu) + eig(J)).
    Returns None when no factorization applies."""
    d1, d2 = diffusion
    if J[0, 1] * J[1, 0] == 0.0:
        return (d1 * nu**2 + c * nu + J[0, 0] - lam) * (
            d2 * nu**2 + c * nu + J[1, 1] - lam
        )
    if d1 == d2:
        mu = np.linalg.eigvals(np.asarray(J, dtype=complex))
        m = d1 * nu**2 + c * nu
        return (m + mu[0] - lam) * (m + mu[1] - lam)
    return None


def eval_dispersion(
    state: InvadedState,
    lam: complex,
    nu: complex,
    c: float,
    p: ModelParams,
) -> complex:
    """Evaluate the dispersion determinant at (lambda, nu) for the given
    state and frame speed, cross-checking the factorized form against the
    2x2 determinant."""
    J = state_jacobian(state, p)
    det = _det_form(J, c, lam, nu)
    fac = _factored_form(J, c, lam, nu)
    if fac is not None and abs(det - fac) > 1e-12 * max(1.0, abs(det)):
        raise ArithmeticError(
            f"dispersion factorization check failed: |det - product| = {abs(det - fac):.3e}"
        )
    return complex(det)


def dispersion_poly_nu(J, c, lam, diffusion=(1.0, 1.0)) -> np.ndarray:
    """Coefficients (highest degree first) of d(lam, .) as a quartic in nu."""
    d1, d2 = diffusion
    q1 = np.array([d1, c, J[0, 0] - lam], dtype=complex)
    q2 = np.array([d2, c, J[1, 1] - lam], dtype=complex)
    poly = np.polymul(q1, q2)
    poly[-1] -= J[0, 1] * J[1, 0]
    return poly


def _d_derivatives(J, c, lam, nu, diffusion):
    """d and its partial derivatives, evaluated exactly.

    The determinant is an explicit polynomial in (lam, nu); differentiating
    the two quadratic factors analytically keeps the Newton residuals at
    machine accuracy (finite differencing would floor near 1e-10 and spoil
    the 1e-12 tolerance).
    """
    d1, d2 = diffusion
    a = d1 * nu * nu + c * nu + J[0, 0] - lam
    b = d2 * nu * nu + c * nu + J[1, 1] - lam
    ap = 2.0 * d1 * nu + c
    bp = 2.0 * d2 * nu + c
    d = a * b - J[0, 1] * J[1, 0]
    d_nu = ap * b + a * bp
    d_lam = -a - b
    d_nunu = 2.0 * d1 * b + 2.0 * d2 * a + 2.0 * ap * bp
    d_lamnu = -ap - bp
    scale = max(1.0, abs(a) + abs(b) + abs(ap) ** 2 + abs(bp) ** 2 + abs(J[0, 1] * J[1, 0]))
    return d, d_nu, d_lam, d_nunu, d_lamnu, scale


def find_double_root(
    state: InvadedState | np.ndarray,
    c: float,
    p: ModelParams | None,
    seed: tuple[complex, complex],
    diffusion=(1.0, 1.0),
    run_pinching: bool = True,
) -> DispersionRoot:
    """Newton iteration for a double-in-nu root: d = 0 and d_nu = 0.

    ``state`` may be an InvadedState (with ``p``) or a raw 2x2 Jacobian for
    the generic code path.  The seed must lie in the Newton basin; the
    analytic seeds are the quadratic-factor vertices (lam, nu) =
    (J_ii - c^2/(4 d_i), -c/(2 d_i)).
    """
    J = state_jacobian(state, p) if isinstance(state, InvadedState) else np.asarray(state)
    lam, nu = complex(seed[0]), complex(seed[1])

    d, d_nu, d_lam, d_nunu, d_lamnu, scale = _d_derivatives(J, c, lam, nu, diffusion)
    for _ in range(NEWTON_MAX_ITER):
        if max(abs(d), abs(d_nu)) < NEWTON_TOL * scale:
            break
        jac = np.array([[d_lam, d_nu], [d_lamnu, d_nunu]])
        try:
            delta = np.linalg.solve(jac, -np.array([d, d_nu]))
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular Newton system in double-root search") from exc
        lam += delta[0]
        nu += delta[1]
        d, d_nu, d_lam, d_nunu, d_lamnu, scale = _d_derivatives(J, c, lam, nu, diffusion)
    if max(abs(d), abs(d_nu)) >= NEWTON_TOL * scale:
        raise ConvergenceError(
            "double-root Newton did not converge", residual=float(max(abs(d), abs(d_nu)))
        )
    d10 = d_lam
    d02 = 0.5 * d_nunu
    multiplicity = 2 if abs(d_nu) < 1e-8 * scale else 1
    pinched = False
    if run_pinching and multiplicity >= 2:
        pinched = trace_root_separation(
            lambda l: dispersion_poly_nu(J, c, l, diffusion), lam, nu
        )
    return DispersionRoot(
        lam=lam,
        nu=nu,
        multiplicity_in_nu=multiplicity,
        pinched=pinched,
        expansion=(complex(d10), complex(d02)),
    )


def pinching_test(
    state: InvadedState | np.ndarray,
    root: DispersionRoot,
    c: float,
    p: ModelParams | None = None,
    diffusion=(1.0, 1.0),
) -> bool:
    """Continuation test of the pinching condition at a converged double root.

    Continues the two colliding nu-roots of d(lambda, .) = 0 along
    lambda = root.lam + s for increasing real s and returns True iff their
    real parts separate to opposite sides of Re(root.nu).
    """
    if root.multiplicity_in_nu < 2:
        raise ValueError("pinching test needs a converged double root")
    J = state_jacobian(state, p) if isinstance(state, InvadedState) else np.asarray(state)
    return trace_root_separation(
        lambda l: dispersion_poly_nu(J, c, l, diffusion), root.lam, root.nu
    )


def trace_root_separation(
    poly_builder, lam0: complex, nu0: complex, s_max: float | None = None, n_steps: int = 200
) -> bool:
    """Continue the two nu-roots colliding at nu0 along lambda = lam0 + s for
    real s in (0, S] and report whether their real parts separate to opposite
    sides of Re(nu0).

    ``poly_builder(lam)`` must return nu-polynomial coefficients (highest
    first).  Raises ConvergenceError when branch tracking becomes ambiguous
    (branch collision away from the start).
    """
    if s_max is None:
        s_max = 10.0 * max(1.0, abs(lam0))
    branches = np.array([nu0, nu0], dtype=complex)
    for s in np.linspace(s_max / n_steps, s_max, n_steps):
        roots = np.roots(poly_builder(lam0 + s))
        # Match each branch to the closest root, requiring distinct roots.
        order = np.argsort(np.abs(roots[:, None] - branches[None, :]), axis=None)
        taken_roots: set[int] = set()
        assigned = [None, None]
        for flat in order:
            r_idx, b_idx = np.unravel_index(flat, (roots.size, 2))
            if assigned[b_idx] is None and r_idx not in taken_roots:
                assigned[b_idx] = roots[r_idx]
                taken_roots.add(r_idx)
            if None not in assigned:
                break
        step_scale = np.sqrt(s_max / n_steps) + abs(branches[0] - branches[1])
        new = np.array(assigned, dtype=complex)
        if np.max(np.abs(new - branches)) > 10.0 * max(1.0, step_scale):
            raise ConvergenceError("root tracking lost a branch during continuation")
        branches = new
    sides = np.sign(branches.real - nu0.real)
    return bool(sides[0] * sides[1] < 0.0)


def linear_spreading_speed(
    state: InvadedState,
    p: ModelParams,
    factor: int | None = None,
) -> tuple[float, float, float]:
    """Speed at which the pinched double root sits at Re(lambda) = 0.

    Bisection on c with the Newton double-root solve inside.  ``factor``
    restricts the search to one quadratic factor (0 = u-branch, 1 =
    v-branch); by default the speed-determining factor (largest Re lambda at
    its vertex) is used.  Returns (c_star, nu_star, eta) with
    eta = -Re(nu_star).
    """
    J = state_jacobian(state, p)
    mu = np.array([J[0, 0], J[1, 1]], dtype=float)
    idx = int(np.argmax(mu)) if factor is None else factor
    if mu[idx] <= 0.0:
        raise ConvergenceError(
            "bracket failure: selected branch is stable at rest, no positive spreading speed",
            mu=float(mu[idx]),
        )

    def root_at(c: float) -> DispersionRoot:
        seed = (mu[idx] - 0.25 * c * c, -0.5 * c)
        return find_double_root(state, c, p, seed, run_pinching=False)

    c_lo, c_hi = 1e-8, 1.0
    while root_at(c_hi).lam.real > 0.0:
        c_hi *= 2.0
        if c_hi > 1e6:
            raise ConvergenceError("bracket failure in spreading-speed bisection")
    for _ in range(200):
        c_mid = 0.5 * (c_lo + c_hi)
        if root_at(c_mid).lam.real > 0.0:
            c_lo = c_mid
        else:
            c_hi = c_mid
        if c_hi - c_lo < 1e-12 * max(1.0, c_hi):
            break
    c_star = 0.5 * (c_lo + c_hi)
    root = find_double_root(state, c_star, p, (0.0, -0.5 * c_star), run_pinching=True)
    if not root.pinched:
        raise ConvergenceError("selected double root fails the pinching condition")
    return c_star, root.nu.real, -root.nu.real


def symbol_lambda_branches(J, c: float, nu_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Both lambda-branches of det(nu^2 + c nu + J - lambda) = 0 along the
    given nu samples (unit diffusion: branches are nu^2 + c nu + eig(J))."""
    J = np.asarray(J, dtype=complex)
    mu = np.linalg.eigvals(J)
    m = nu_values * nu_values + c * nu_values
    return m + mu[0], m + mu[1]


def essential_spectrum_curve(
    state: InvadedState,
    eta: float,
    c: float,
    p: ModelParams,
    k_max: float,
    n_k: int,
) -> SpectrumCurve:
    """Sample both lambda-branches along nu = -eta + i k, k in [-k_max, k_max].

    Also records whether the sampled curves touch the imaginary axis only at
    the origin (minimal critical spectrum) and stay out of Re(lambda) > 0.
    """
    if n_k < 2:
        raise ValueError("n_k must be at least 2")
    J = state_jacobian(state, p)
    k = np.linspace(-k_max, k_max, n_k)
    nu = -eta + 1j * k
    b1, b2 = symbol_lambda_branches(J, c, nu)
    # Order so that branch 1 is the one through the u-factor (J[0,0]).
    if abs(b1[n_k // 2] - (eta**2 - c * eta + J[0, 0])) > abs(
        b2[n_k // 2] - (eta**2 - c * eta + J[0, 0])
    ):
        b1, b2 = b2, b1
    max_re = float(max(b1.real.max(), b2.real.max()))
    on_axis_ok = True
    for branch in (b1, b2):
        near_axis = np.abs(branch.real) < 1e-12
        for idx in np.nonzero(near_axis)[0]:
            if abs(k[idx]) > 1e-12 or abs(branch[idx].imag) > 1e-12:
                on_axis_ok = False
    return SpectrumCurve(
        eta=eta,
        k_samples=k,
        lambda_branches=(b1, b2),
        only_origin_marginal=on_axis_ok and max_re <= 1e-12,
        max_re=max_re,
    )
