"""Solitary waves of two linearly coupled stationary NLS equations.

Public surface: problem construction (:mod:`cnls.model`), Green's
kernels and cone constants (:mod:`cnls.greens`), hypothesis checks and
shell radii (:mod:`cnls.hypotheses`), the coupling operator
(:mod:`cnls.fixed_point`), the solvers (:mod:`cnls.solver`), the
independent difference oracle (:mod:`cnls.oracle`), branch tracing
(:mod:`cnls.continuation`), and the command line (:mod:`cnls.cli`).
"""

from .continuation import BranchPoint, scaled_problem, scaling_seed, trace_branch
from .errors import (
    CnlsError,
    DivisionDomain,
    EmptySupport,
    HypothesisFailure,
    IntegrationOverflow,
    InvalidCoefficient,
    InvalidGrid,
    NewtonDivergence,
    NoNontrivialSolution,
    NonPositivePotential,
    ParameterOutOfRange,
    ParseError,
    SingularJacobian,
    SupportContainsOrigin,
    SymmetryViolation,
    UnsupportedNonlinearity,
)
from .fixed_point import WavePair, apply_T, cone_gap, residual
from .greens import (
    ConeConstants,
    GreensKernel,
    LinearBasis,
    build_halfline_kernel,
    build_kernel,
    build_halfline_basis,
    build_linear_basis,
    cone_constants,
    discrete_cone_constants,
    greens_apply,
    greens_eval,
)
from .hypotheses import (
    AnnulusRadii,
    BranchBounds,
    GrowthConstants,
    HypothesisReport,
    annulus_radii,
    branch_bounds,
    check_linear_smallness,
    check_ratio_condition,
    check_structural,
    full_report,
    growth_constants,
)
from .model import (
    CoefficientField,
    Grid,
    Nonlinearity,
    Problem,
    eval_coefficient,
    preset_problem,
    support_pieces,
    support_union,
)
from .oracle import jacobian_check, oracle_solve
from .solver import Solution, SolverConfig, solve_ground_state, solve_odd

__version__ = "0.1.0"
