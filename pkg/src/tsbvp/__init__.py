"""Time-scale calculus and a solver/verifier for n-th order dynamic BVPs on finite time scales."""

from .errors import ConfigError, DomainError, ExprEvalError, ExprSyntaxError, NewtonFailure
from .growth import BallParams, GrowthEnvelope, check_A1, check_A2, compute_B1, f_envelope, g_envelope
from .operators import (
    BvpProblem,
    ResidualBundle,
    fixed_point_iterate,
    hypothesis_report,
    s1_apply,
    s2_apply,
    split_T1_S3,
    split_T_S,
)
from .solver import SolutionRecord, SolverConfig, assemble_residual, classify, collocation_set, multistart_search, newton_solve
from .timescale import (
    GridFunction,
    TimeScale,
    delta_derivative,
    delta_integral,
    graininess,
    norm_X1,
    rho,
    sigma,
    sigma_iter,
    taylor_monomial,
)

__version__ = "0.1.0"
