"""Numerical laboratory for wave breaking in the Dullin-Gottwald-Holm
equation and its two-component system."""

from .core import (
    Field,
    Grid,
    Parameters,
    State,
    derivative,
    ic_preset,
    make_grid,
    make_parameters,
    spectral_interpolate,
)
from .helmholtz import NonlocalOperator, green_kernel, make_operator
from .evolution import (
    BlowupReport,
    SolverConfig,
    Trajectory,
    adaptive_dt,
    dgh2_rhs,
    dgh_rhs,
    simulate,
    step_rk4,
)
from .characteristics import (
    CharacteristicPath,
    PathPoint,
    advect,
    collapse_rate,
    momentum_residual,
    plain_ab,
    rho_invariant_residual,
    weighted_ab,
    weighted_ab_log,
)
from .analysis import (
    CriterionVerdict,
    GapField,
    check_criterion_dgh,
    check_criterion_dgh2,
    energy_E,
    energy_F,
    full_kernel_gap,
    h_alpha_norm,
    one_sided_gaps,
    sobolev_gap,
)

__version__ = "0.1.0"
