"""Exception and warning types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter is outside its documented domain (e.g. nonpositive spacing)."""


class DegenerateInputError(ValueError):
    """Input data carries no usable geometric content (e.g. zero-length recording)."""


class IllConditionedFitError(RuntimeError):
    """The least-squares design matrix is rank deficient and no ridge was requested."""


class SingularPhaseVelocityError(ArithmeticError):
    """The closed-form phase velocity denominator vanished (query at or beyond the
    osculating center, where the nearest-point problem degenerates)."""


class SolverFailureError(RuntimeError):
    """The tracking normal equations are not positive definite (degenerate weights)."""


class NumericalDivergenceError(RuntimeError):
    """A state became nonfinite during integration."""


class EndOfScenario(Exception):
    """A scripted input trace has been exhausted."""


class FitQualityWarning(UserWarning):
    """Non-fatal: the fitted curve violates the unit-speed tolerance at some knots."""
