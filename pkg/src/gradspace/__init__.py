"""Variational problems over gradient relations on finite carriers."""

from .core import (
    Element,
    EnvelopeRelation,
    GradientRelation,
    LinearGraphRelation,
    LinearMap,
    NormSpec,
    SolveReport,
    SolverConfig,
    SpaceDescriptor,
    block_lp_norm,
    check_gradient_pair,
    element,
    estimate_poincare_constant,
    euclidean_norm,
    euclidean_space,
    lp_norm,
    lp_space,
    matrix_space,
    max_abs_envelope,
    minimal_gradient,
    norm_value,
    scale_gradient_check,
    schatten_spec,
    sobolev_norm,
    toy_complex_relation,
)
from .variational import (
    ConeSpec,
    FeasibleSet,
    HalfSpace,
    LowerBound,
    PsdLower,
    PsdUpper,
    UpperBound,
    ZeroOnMask,
    check_feasible_obstacle,
    minimize_rayleigh,
    rayleigh_quotient,
    solve_dirichlet,
    solve_multi_obstacle,
    solve_obstacle,
    verify_rk_cone,
)
from .lattice import (
    COMPONENTWISE,
    PSD,
    OrderSpec,
    check_lub_property,
    lattice_max,
    lattice_min,
    order_leq,
    strict_norm_monotonicity_check,
)
from .errors import (
    DimensionMismatch,
    GradspaceError,
    InfeasibleProblem,
    NonConvergence,
    PreconditionViolation,
    RegularityViolation,
    SchemaError,
    UnsupportedProblem,
)

__version__ = "0.1.0"
