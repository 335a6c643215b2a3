"""Prescribed-mass states of nonautonomous Schrodinger-Poisson equations.

Radial-grid functionals, fiber-map geometry, and mass-constrained solvers
for

    -Delta u + lambda u + (|x|^{-1} * u^2) u = A(x) |u|^{p-2} u,
    int |u|^2 dx = c,  u in H^1(R^3),

with A(|x|) >= A_inf > 0 flattening at infinity.
"""

from .errors import (
    BadBracketError,
    DegenerateFieldError,
    DivergenceError,
    FiberRootNotFoundError,
    InvalidConfigError,
    ResolutionError,
    ShapeMismatchError,
    SpnormError,
    UnsupportedExponentError,
)
from .fiber import (
    FiberEvaluator,
    FiberProfile,
    fiber_derivative,
    fiber_energy,
    fiber_gap,
    fiber_pohozaev,
    find_tu,
)
from .functionals import (
    EnergyBreakdown,
    MultiplierDiagnostics,
    coercivity_diagnostic,
    coulomb,
    coulomb_bruteforce,
    dirichlet,
    energy,
    energy_gradient,
    extract_multiplier,
    gn_diagnostic,
    mass,
    newton_potential,
    radial_laplacian,
    weighted_nonlinearity,
)
from .grids import (
    GaussianParams,
    RadialField,
    RadialGrid,
    gaussian_field,
    integrate_radial,
    make_grid,
    radial_derivative,
    resample_scaled,
)
from .potentials import (
    ConditionReport,
    Potential,
    TabulatedPotential,
    Witness,
    check_conditions,
    constant_potential,
    eval_A,
    eval_gradA_dot_x,
    exp_bump_potential,
    load_tabulated_potential,
    phi_diagnostic,
    rational_bump_potential,
    recheck_witness,
)
from .solvers import (
    CbarBracket,
    GammaSweepReport,
    MSweepReport,
    SolveConfig,
    SolveResult,
    SweepRecord,
    VerificationReport,
    bracket_cbar,
    solve_subcritical,
    solve_supercritical,
    sweep_gamma,
    sweep_m,
    verify_solution,
)

__version__ = "0.1.0"
