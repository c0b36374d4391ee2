"""Exception types shared across the solver modules."""


class NlcflowError(Exception):
    """Base class for all solver errors."""


class CflViolation(NlcflowError):
    """Explicit transport step asked to run past its CFL limit."""


class LinearSolveFailure(NlcflowError):
    """An inner conjugate-gradient solve hit its iteration cap."""


class IncompatibleRhs(NlcflowError):
    """Pressure Poisson right-hand side has a nonzero mean beyond round-off.

    This signals broken boundary handling upstream (nonzero net flux
    through the walls), not a solver problem.
    """


class NotApplicable(NlcflowError):
    """Operation requested for a forcing variant it is not defined for."""


class MaxIterations(NlcflowError):
    """Outer fixed-point iteration (stationary solve) did not converge."""


class InsufficientSamples(NlcflowError):
    """Too few usable samples after filtering."""


class DegenerateFit(NlcflowError):
    """Decay-fit input hit the floating-point floor (faster-than-algebraic
    decay; callers should report 'exceeds prediction')."""


class OrderRegression(NlcflowError):
    """Observed convergence order fell short of the expected order."""


class StepRejected(NlcflowError):
    """CFL auto-shrink reduced dt below the minimum allowed step."""


class ConfigError(NlcflowError):
    """Run configuration violates a validated assumption."""
