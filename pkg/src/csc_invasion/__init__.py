"""Numerical toolkit for a two-component cancer-stem-cell / tumor-cell
invasion model: front speeds, dispersion relations, traveling-wave profiles,
weighted spectral stability, and total-mass dynamics."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Equilibrium,
    EquilibriumKind,
    JacobianForm,
    ModelParams,
    Regime,
    SpeedPrediction,
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
from .integrator import (  # noqa: F401
    BoundaryRight,
    Grid1D,
    Scenario,
    Scheme,
    StateField,
    StepControl,
    initial_step_data,
    integrate,
    make_step_control,
    max_stable_dt,
    step,
)
from .fronts import (  # noqa: F401
    FitModel,
    FrontComponent,
    FrontObserver,
    FrontTrace,
    SpeedFit,
    SpeedKind,
    bramson_check,
    crossing_position,
    fit_speed,
    track,
)
from .dispersion import (  # noqa: F401
    DispersionRoot,
    InvadedState,
    SpectrumCurve,
    essential_spectrum_curve,
    eval_dispersion,
    find_double_root,
    linear_spreading_speed,
    pinching_test,
)
from .waves import (  # noqa: F401
    WaveKind,
    WaveProfile,
    check_wake_bound,
    fit_edge_asymptotics,
    solve_full_front,
    solve_reduced_front,
    steady_residual,
)
from .spectrum import (  # noqa: F401
    OperatorPair,
    SpectrumReport,
    build_weighted_linearization,
    compute_spectrum,
    resonance_probe,
)
from .mass import (  # noqa: F401
    MassObserver,
    MassSeries,
    ParadoxWindow,
    approx_mass,
    empirical_mass_sensitivity,
    mass_sensitivity_app,
    paradox_window,
    total_mass,
)
