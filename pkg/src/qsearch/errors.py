"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
validity refusals exit 3, numerical failures exit 4.
"""


class QSearchError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(QSearchError, ValueError):
    """A parameter is outside its documented domain."""


class OutOfRegimeError(InvalidParameterError):
    """A quantity was requested outside the regime where it is defined."""


class DenseLimitError(QSearchError):
    """A dense matrix was requested above the configured size limit."""


class ContractViolationError(QSearchError):
    """An input violates a structural precondition (e.g. not Hermitian)."""


class ValidityError(QSearchError):
    """A weak-coupling approximation bound is violated hard (margin > 1)."""


class StiffnessError(QSearchError):
    """The adaptive integrator failed to make progress."""


class NoEstimateError(QSearchError):
    """A fit could not produce a trustworthy estimate."""


class ConfigError(QSearchError, ValueError):
    """An experiment configuration document is malformed."""
