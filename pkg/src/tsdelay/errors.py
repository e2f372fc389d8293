"""Exception hierarchy shared by all tsdelay modules."""


class TimeScaleError(Exception):
    """Base class for every error raised by tsdelay."""


# --- time scale construction and lookup -------------------------------------

class OverlapError(TimeScaleError, ValueError):
    """Components intersect (beyond touching endpoints)."""


class StepError(TimeScaleError, ValueError):
    """The dense sampling step is not positive or exceeds an interval length."""


class NotInTimescale(TimeScaleError, ValueError):
    """A point does not belong to the time scale."""


class EmptyInterval(TimeScaleError, ValueError):
    """Interval with left end beyond the right end."""


# --- calculus ----------------------------------------------------------------

class OutOfDomain(TimeScaleError, ValueError):
    """A point lies outside the domain of a grid function or operation."""


class KappaViolation(OutOfDomain):
    """Derivative requested at a left-scattered maximum."""


class BranchError(TimeScaleError, ValueError):
    """Real logarithm undefined in the cylinder transformation (1 + h z <= 0)."""


class RegressivityError(TimeScaleError, ValueError):
    """The coefficient of an exponential is not (positively) regressive."""


# --- solvers -----------------------------------------------------------------

class SolverError(TimeScaleError):
    """Base class for solver failures."""


class MissingBound(SolverError):
    """A required bound is unknown and could not be estimated."""


class NoConvergence(SolverError):
    """Picard iteration hit its iteration cap."""

    def __init__(self, message, *, cell=None, iterations=None, sup_diff=None):
        super().__init__(message)
        self.cell = cell
        self.iterations = iterations
        self.sup_diff = sup_diff


class BallExit(SolverError):
    """An iterate left the ball B(phi(beta), epsilon)."""


class DomainError(SolverError, ValueError):
    """Problem data inconsistent with the time scale or the right-hand side misbehaved."""


class WindowTooSmall(SolverError):
    """Existence window collapses to a single right-dense point."""


class SnapError(DomainError):
    """A delayed argument cannot be snapped to a stored sample point."""


class EvaluationError(SolverError, ValueError):
    """Coefficient or forcing function could not be evaluated on the grid."""


class EnvelopeViolation(SolverError):
    """The right-hand side exceeded its declared growth envelope."""


# --- front end ---------------------------------------------------------------

class ExprError(TimeScaleError, ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    """Malformed expression text."""

    def __init__(self, message, position):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownFunction(ExprError):
    pass


class ArityError(ExprError):
    pass


class UnboundVariable(ExprError):
    pass


class MathDomain(ExprError):
    """Evaluation left the real domain of a function (log of 0, 1/0, ...)."""


class ParseError(TimeScaleError, ValueError):
    """Malformed configuration text."""


class ValidationError(TimeScaleError, ValueError):
    """Configuration parses but violates a problem invariant."""
