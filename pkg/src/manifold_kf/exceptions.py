"""Exception types shared across the package."""


class NumericalError(ArithmeticError):
    """A filter step produced a non-finite, singular or indefinite quantity."""

    def __init__(self, message, eps=None):
        super().__init__(message)
        #: Tangent perturbation at which the failure was observed, if any.
        self.eps = eps


class ContractError(ValueError):
    """A user-supplied model function returned a value of the wrong kind."""
