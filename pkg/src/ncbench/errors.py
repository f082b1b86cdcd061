"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A supplied parameter is outside its legal range or of the wrong form."""


class DimensionError(ValueError):
    """An array argument has an incompatible shape or dimension."""


class DomainError(ValueError):
    """A point lies outside the unit-cube domain."""


class NumericalBreakdownError(ArithmeticError):
    """A factorization pivot or variance fell below the stability floor."""


class FitError(RuntimeError):
    """Hyperparameter search could not produce a usable candidate."""


class EvaluationError(RuntimeError):
    """An objective or integrand returned a non-finite value."""


class DegenerateDensityError(ValueError):
    """A sampling density has zero or non-finite total mass."""


class BoundInapplicableError(ValueError):
    """Requested analytic bounds are not valid for this configuration."""


class PlanError(ParameterError):
    """An experiment plan file is malformed or inconsistent."""
