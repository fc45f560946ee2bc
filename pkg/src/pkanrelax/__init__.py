"""Exact convex envelopes of univariate polynomials and the network relaxations built on them."""

from .envelope import (
    Bitangent,
    PiecewiseEnvelope,
    bitangent,
    build_envelope,
    concave_envelope,
    conjugate_eval,
    convex_intervals,
    envelope_eval,
    envelope_slope,
    graham_scan,
    poly_range,
)
from .errors import (
    BracketFailure,
    DimensionMismatch,
    IdenticallyZero,
    Infeasible,
    NotConvexOnInterval,
    NotMonotone,
    OutOfDomain,
    ParseError,
    PkanRelaxError,
    RootFailure,
)
from .gam import MPGAM, check_monotone, component_envelopes, gam_relaxation_eval, gam_relaxation_min
from .oracles import discrete_lower_hull, gam_grid_min, hull_interpolate, multistart_min
from .pkan import PKAN, build_relaxation, forward_eval, generate_random, propagate_bounds
from .poly import Interval, Polynomial, derivative, derivative_range, eval_poly, real_roots
from .solver import LinearProgram, SolveReport, lp_solve, relative_gap, solve_relaxation

__version__ = "0.1.0"
