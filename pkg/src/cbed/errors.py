"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class CorruptGraphError(RuntimeError):
    """A graph that should be acyclic turned out to contain a cycle."""


class UnsupportedScaleError(ValueError):
    """The requested problem size is beyond what the routine supports."""


class UndefinedMetricError(ValueError):
    """A metric is undefined for the given labels (e.g. no positives)."""


class NumericalDegeneracyError(ArithmeticError):
    """A factorization failed even after regularization."""
