"""Exception hierarchy shared by all modules."""


class SequentialChshError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SequentialChshError, ValueError):
    """An argument lies outside the domain of the operation."""


class NotPSD(SequentialChshError, ValueError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""


class NoConvergence(SequentialChshError, ArithmeticError):
    pass


class InvalidInstrument(SequentialChshError, ValueError):
    """Effects of a measurement do not sum to the identity."""


class NonRealCorrelation(SequentialChshError, ValueError):
    pass


class NotImplementing(SequentialChshError, ValueError):
    """Kraus operators do not implement the requested effect."""


class HypothesisViolated(SequentialChshError):
    """The input state is outside the class for which plans are guaranteed."""


class InfeasibleAtPrecision(SequentialChshError, ArithmeticError):
    """The requested number of violations cannot be resolved in double precision."""
