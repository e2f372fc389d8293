"""Delay dynamic equations on time scales.

Time scales are finite unions of closed intervals (sampled with a uniform
step) and isolated points.  The package provides the delta calculus on them,
successive-approximation and method-of-steps solvers for delay equations,
and the variation-of-parameters representation of linear delay systems.
"""

from .calculus import (
    RegressivityClass,
    cumulative_integral,
    cylinder,
    delta_derivative,
    delta_integral,
    exp_function,
    exp_values,
    graininess,
    hk_polynomial,
    hk_values,
    regressivity_class,
)
from .config import ProblemSpec, parse_config
from .errors import *  # noqa: F401,F403
from .expr import eval_expression, parse_expression, to_source
from .solver import (
    DelayIVP,
    Diagnostics,
    LinearDelaySystem,
    Solution,
    estimate_bounds,
    estimate_M,
    existence_window,
    iterate_error_bound,
    make_partition,
    picard_solve,
    solve_global,
    solve_global_nonlinear,
    solve_steps,
)
from .timescale import GridFunction, Interval, Point, PointClass, Side, TimeScale, build_timescale, integers
from .vop import (
    CharacteristicSet,
    PrincipalSolution,
    Representation,
    RepresentationReport,
    characteristic,
    principal_solution,
    verify_representation,
    vop_evaluate,
)

__version__ = "0.1.0"
