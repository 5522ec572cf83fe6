"""Exception hierarchy shared by all ancsim modules."""


class AncError(Exception):
    """Base class for every error raised by ancsim."""


class ValidationError(AncError, ValueError):
    """A parameter or configuration violates a documented precondition."""


class DivergenceError(AncError):
    """An adaptive loop diverged.

    Carries the iteration index at which divergence was detected and,
    when available, the partial trace accumulated up to that point.
    """

    def __init__(self, message, iteration=None, partial_trace=None):
        super().__init__(message)
        self.iteration = iteration
        self.partial_trace = partial_trace


class InfeasibleError(AncError):
    """The requested plant combination cannot be compensated.

    Raised when the primary path carries less delay than the secondary
    path, making a causal optimal controller impossible.
    """


class ConditioningError(AncError):
    """A linear solve was refused because the system is ill-conditioned."""

    def __init__(self, message, condition_number):
        super().__init__(message)
        self.condition_number = condition_number
