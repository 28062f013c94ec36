"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EvaluationError(RuntimeError):
    """A numerical evaluation failed to reach its accuracy target.

    The ``partial`` attribute, when set, carries the best value obtained
    before giving up.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
