"""Exception hierarchy shared by every pqdlab module."""


class PQDLabError(Exception):
    """Base class for all errors raised by pqdlab."""


class DomainError(PQDLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InsufficientDataError(PQDLabError, ValueError):
    """Too few samples for an empirical estimate."""


class PreconditionError(PQDLabError, ValueError):
    """A model does not satisfy the structural assumption an evaluator needs."""


class DegenerateModelError(PQDLabError, ArithmeticError):
    """A model or design makes an estimator undefined (zero denominator, singular Gram matrix)."""


class DegenerateDesignError(DegenerateModelError):
    """The regressors carry no variation: sum of squared deviations is zero."""


class SingularMatrixError(DegenerateModelError):
    """Cholesky factorization met a non-positive pivot."""

    def __init__(self, pivot, value):
        self.pivot = pivot
        self.value = value
        super().__init__(
            f"matrix is not positive definite: pivot {pivot} has value {value!r}"
        )


class ConfigError(PQDLabError):
    """An experiment configuration failed validation.

    ``errors`` holds one human-readable message per offending field.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
