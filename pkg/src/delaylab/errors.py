"""Exception hierarchy shared across the package.

Every error raised on a documented failure path derives from
``DelayLabError`` so callers (and the CLI) can distinguish domain
failures from genuine bugs.
"""


class DelayLabError(Exception):
    """Base class for all documented failure modes."""


class PreconditionError(DelayLabError, ValueError):
    """An argument violates a stated precondition."""


class ModelLookupError(DelayLabError):
    """Unknown model name; the message lists the available names."""


class QuadratureError(DelayLabError):
    """Adaptive quadrature failed (non-finite sample or no convergence)."""


class RootFindError(DelayLabError):
    """Root bracketing failed (no sign change or iteration budget spent)."""


class NoExitInWindowError(DelayLabError):
    """The exit integral stays negative up to the right window edge."""


class IntegrationError(DelayLabError):
    """Trajectory integration failed."""


class StepSizeUnderflowError(IntegrationError):
    """The adaptive step collapsed below the resolvable time scale."""


class ZUnderflowError(IntegrationError):
    """z left the representable range of the (x, z) chart."""


class MaxStepsExceededError(IntegrationError):
    """Step budget spent before reaching the stop section."""


class UsageError(DelayLabError):
    """Malformed command line or config file (CLI exit code 64)."""
